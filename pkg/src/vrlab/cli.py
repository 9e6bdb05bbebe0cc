"""Command-line front end: manifest-driven experiments over all modules.

Every subcommand writes CSV tables and field dumps plus a JSON manifest
(config, versions, wall time, key metrics) into the output directory, so a
run can be reproduced from its manifest alone.  Exit codes: 0 success, 2
validation error, 3 numerical failure.
"""

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import io as vio
from ._core import set_num_threads
from .fields import AxisymGrid, circulation, symmetric_grid
from .groundstate import ShootingError, kernel_mode_residual, pohozaev_defects, solve_ground_state


class ValidationError(ValueError):
    pass


def _out_dir(args, command):
    root = args.out or os.environ.get("VRLAB_OUT", "vrlab-out")
    path = os.path.join(root, command)
    os.makedirs(path, exist_ok=True)
    return path


def _config_dict(args, command):
    cfg = {k: v for k, v in vars(args).items() if k != "fn" and not callable(v)}
    cfg["command"] = command
    return cfg


def _parse_grid(spec):
    try:
        nr, nz = spec.lower().split("x")
        return int(nr), int(nz)
    except Exception as exc:
        raise ValidationError(f"bad --grid {spec!r}; expected NRxNZ") from exc


def _parse_domain(spec):
    try:
        r0, r1, z0, z1 = (float(x) for x in spec.split(","))
        return r0, r1, z0, z1
    except Exception as exc:
        raise ValidationError(f"bad --domain {spec!r}; expected r0,r1,z0,z1") from exc


def _grid_from_args(args):
    nr, nz = _parse_grid(args.grid)
    r0, r1, z0, z1 = _parse_domain(args.domain)
    return AxisymGrid(r0, r1, z0, z1, nr, nz)


def _validate_physical(args):
    if args.kappa is not None and args.kappa <= 0:
        raise ValidationError("kappa must be positive")
    if args.W is not None and args.W <= 0:
        raise ValidationError("W must be positive")
    if args.eps is not None and not 0 < args.eps < 1:
        raise ValidationError("eps must lie in (0, 1)")
    if args.p is not None and args.p < 2:
        raise ValidationError("p must be >= 2")


def _resolve_kappa_w(args, gs):
    from .asymptotics import thin_ring_parameters

    if args.kappa is None or args.W is None:
        kappa, w = thin_ring_parameters(gs)
        return args.kappa or kappa, args.W or w
    return args.kappa, args.W


def cmd_ground_state(args):
    out = _out_dir(args, "ground-state")
    t0 = time.time()
    gs = solve_ground_state(args.p, tol=args.tol or 1e-10)
    d1, d2 = pohozaev_defects(gs)
    gs.export(os.path.join(out, "profile.csv"), os.path.join(out, "profile.json"))
    metrics = {
        "lambda_p": gs.lambda_p,
        "u_prime_1": gs.u_prime_1,
        "center_value": gs.center_value,
        "identity_defects": [d1, d2],
        "kernel_mode_residual": kernel_mode_residual(gs),
    }
    vio.write_manifest(os.path.join(out, "manifest.json"), _config_dict(args, "ground-state"), metrics, time.time() - t0)
    print(f"lambda_p={gs.lambda_p:.12f} u_prime_1={gs.u_prime_1:.12f} defects=({d1:.2e}, {d2:.2e})")
    return 0


def cmd_green_check(args):
    from .green import GreenConfig, asymptotic_error_table

    out = _out_dir(args, "green-check")
    t0 = time.time()
    cfg = GreenConfig(quad_order=args.quad_order)
    rows = asymptotic_error_table(cfg)
    vio.write_csv(
        os.path.join(out, "asymptotic_errors.csv"),
        ["rho", "g1", "near", "far", "rel_err_near", "rel_err_far"],
        rows,
    )
    worst_near = max(r[4] / (r[0] * math.log(1 / r[0])) for r in rows if r[0] <= 1e-2)
    worst_far = max(r[5] * r[0] for r in rows if r[0] >= 10.0)
    metrics = {"near_constant": worst_near, "far_constant": worst_far, "rows": len(rows)}
    vio.write_manifest(os.path.join(out, "manifest.json"), _config_dict(args, "green-check"), metrics, time.time() - t0)
    print(f"wrote {len(rows)} rows; near constant {worst_near:.3f}, far constant {worst_far:.3f}")
    return 0


def cmd_ring_params(args):
    from .asymptotics import solve_ring_parameters

    out = _out_dir(args, "ring-params")
    t0 = time.time()
    gs = solve_ground_state(args.p, tol=1e-10)
    kappa, w = _resolve_kappa_w(args, gs)
    eps_list = [args.eps] if args.eps else [1e-2, 1e-3, 1e-4]
    rows = []
    for eps in eps_list:
        pr = solve_ring_parameters(kappa, w, eps, args.p, gs)
        r1, r2 = pr.residuals()
        rows.append((eps, pr.r_star, pr.s_star, pr.a_star, pr.mu_star, r1, r2))
    vio.write_csv(
        os.path.join(out, "ring_params.csv"),
        ["eps", "r_star", "s_star", "a_star", "mu_star", "residual_radius_eq", "residual_mass_eq"],
        rows,
    )
    metrics = {"kappa": kappa, "W": w, "worst_residual": max(max(r[5], r[6]) for r in rows)}
    vio.write_manifest(os.path.join(out, "manifest.json"), _config_dict(args, "ring-params"), metrics, time.time() - t0)
    for row in rows:
        print(f"eps={row[0]:g} r*={row[1]:.8f} s*={row[2]:.8f} residuals=({row[5]:.1e}, {row[6]:.1e})")
    return 0


def _solve_ring_from_args(args, gs, grid, operator=None):
    from .asymptotics import core_vorticity, solve_ring_parameters
    from .steady import patch_seed, solve_steady

    kappa, w = _resolve_kappa_w(args, gs)
    if args.seed_kind == "asymptotic":
        params = solve_ring_parameters(kappa, w, args.eps, args.p, gs)
        seed = core_vorticity(gs, params, grid)
    else:
        params = None
        radius = args.seed_radius or 12.0 * args.eps
        center = (args.seed_center, 0.0) if args.seed_center else (kappa / (4 * math.pi * w), 0.0)
        seed = patch_seed(grid, kappa, center, radius)
    ring = solve_steady(kappa, w, args.eps, args.p, seed, tol=args.tol or 1e-8, operator=operator)
    return ring, params


def cmd_solve_steady(args):
    from .steady import diagnostics

    out = _out_dir(args, "solve-steady")
    t0 = time.time()
    gs = solve_ground_state(args.p, tol=1e-10)
    grid = _grid_from_args(args)
    ring, params = _solve_ring_from_args(args, gs, grid)
    ring.save(out)
    d = diagnostics(ring)
    vio.write_csv(os.path.join(out, "diagnostics.csv"), list(d.keys()), [list(d.values())])
    metrics = dict(d)
    if params is not None:
        metrics["r_star"] = params.r_star
        metrics["s_star"] = params.s_star
    vio.write_manifest(os.path.join(out, "manifest.json"), _config_dict(args, "solve-steady"), metrics, time.time() - t0)
    print(
        f"converged in {ring.iterations} sweeps: defect={ring.defect:.2e} "
        f"center=({ring.center[0]:.4f}, {ring.center[1]:.2e}) diam/eps={2 * ring.support_radius / ring.eps:.2f}"
    )
    return 0


def cmd_approx_compare(args):
    from .asymptotics import (
        approx_stream,
        blowup_profile_check,
        expansion_defect,
        free_boundary_deviation,
        kelvin_hicks_residual,
        measured_ring_geometry,
        solve_ring_parameters,
    )

    out = _out_dir(args, "approx-compare")
    t0 = time.time()
    gs = solve_ground_state(args.p, tol=1e-10)
    kappa, w = _resolve_kappa_w(args, gs)
    grid = _grid_from_args(args)
    ring, params = _solve_ring_from_args(args, gs, grid)
    if params is None:
        params = solve_ring_parameters(kappa, w, args.eps, args.p, gs)
    x1, s = measured_ring_geometry(ring)
    dev, s_mean, center = free_boundary_deviation(ring)
    psi_u = approx_stream(gs, params, grid, backend="grid")
    psi_gap = float(np.abs(ring.psi.values - psi_u.values).max())
    n_loc = int(min(1536, max(384, 24 / args.eps)))
    grid_loc = symmetric_grid(params.r_star + 4 * params.s_star, 4 * params.s_star, n_loc, n_loc)
    exp_defect = expansion_defect(gs, params, grid_loc)
    blow = blowup_profile_check(ring, gs)
    metrics = {
        "centroid_defect": abs(x1 - params.r_star),
        "core_radius_defect": abs(s - params.s_star) / params.s_star,
        "free_boundary_sup_t": dev,
        "stream_gap_over_eps": psi_gap / args.eps,
        "expansion_defect_ratio": exp_defect / (args.eps**2 * math.log(1 / args.eps)),
        "kelvin_hicks_residual": kelvin_hicks_residual(kappa, w, args.eps, args.p, x1, s),
        "blowup_mass_defect": blow["mass_defect"],
        "blowup_profile_defect": blow["profile_defect"],
    }
    vio.write_csv(os.path.join(out, "comparison.csv"), list(metrics.keys()), [list(metrics.values())])
    vio.write_manifest(os.path.join(out, "manifest.json"), _config_dict(args, "approx-compare"), metrics, time.time() - t0)
    for k, v in metrics.items():
        print(f"{k}: {v:.4e}")
    return 0


def cmd_maximize(args):
    from .steady import SteadyRing
    from .variational import GridInteraction, asymptotic_report, maximize

    out = _out_dir(args, "maximize")
    t0 = time.time()
    gs = solve_ground_state(args.p, tol=1e-10)
    kappa, w = _resolve_kappa_w(args, gs)
    if args.from_ring:
        header, zeta_vals = vio.read_field(os.path.join(args.from_ring, "ring_zeta.axif"))
        manifest = json.load(open(os.path.join(args.from_ring, "ring_manifest.json")))
        grid = AxisymGrid(header["r_min"], header["r_max"], header["z_min"], header["z_max"], header["nr"], header["nz"])
        from .fields import ScalarField

        zeta0 = ScalarField(grid, zeta_vals)
        eps = manifest["config"]["eps"]
        kappa = manifest["config"]["kappa"]
        w = manifest["config"]["W"]
    else:
        grid = _grid_from_args(args)
        ring, _ = _solve_ring_from_args(args, gs, grid)
        zeta0 = ring.zeta
        eps = args.eps
    w_speed = w * math.log(1.0 / eps)
    from .operators import GridOperator
    from .variational import ring_background

    op = GridOperator(grid)
    r0, z0_c, v0, nu0 = zeta0.support_points()
    w0 = v0 * nu0
    center = (float((r0 * w0).sum() / w0.sum()), float((z0_c * w0).sum() / w0.sum()))
    bg = ring_background(grid, op, circulation(zeta0), center)
    run = maximize(zeta0, w_speed, max_iter=args.max_iter, interaction=GridInteraction(grid, op, background=bg))
    rep = asymptotic_report(run, kappa, w, eps)
    vio.write_csv(
        os.path.join(out, "trace.csv"),
        ["iteration", "penalized_energy"],
        list(enumerate(run.energies)),
    )
    vio.write_field(os.path.join(out, "maximizer.axif"), grid, run.result.values)
    vio.write_manifest(os.path.join(out, "manifest.json"), _config_dict(args, "maximize"), rep, time.time() - t0)
    print(
        f"iterations={run.iterations} energy={run.energy:.6e} diam/eps={rep['diameter_over_eps']:.2f} "
        f"centroid_r={rep['centroid_r']:.4f} mu_tilde={rep['mu_tilde']:.4e}"
    )
    return 0


def cmd_evolve(args):
    from .evolution import drift_report, run as evolve_run, stability_experiment
    from .operators import GridOperator

    out = _out_dir(args, "evolve")
    t0 = time.time()
    gs = solve_ground_state(args.p, tol=1e-10)
    grid = _grid_from_args(args)
    op = GridOperator(grid)
    ring, _ = _solve_ring_from_args(args, gs, grid, operator=op)
    if args.delta and args.delta > 0:
        result = stability_experiment(ring, args.delta * ring.kappa, args.T, operator=op, seed=args.seed or 0, cfl=args.cfl)
        monitors = result["monitors"]
        metrics = {k: v for k, v in result.items() if k != "monitors"}
    else:
        final = evolve_run(ring.zeta, args.T, cfl=args.cfl, operator=op, reference=ring.zeta)
        monitors = final.monitors
        metrics = drift_report(monitors)
    keys = [k for k in monitors if k != "t"]
    rows = list(zip(monitors["t"], *[monitors[k] for k in keys]))
    vio.write_csv(os.path.join(out, "monitors.csv"), ["t"] + keys, rows)
    vio.write_manifest(os.path.join(out, "manifest.json"), _config_dict(args, "evolve"), metrics, time.time() - t0)
    print(f"steps={len(monitors['t'])}: " + " ".join(f"{k}={v:.3e}" for k, v in metrics.items() if isinstance(v, float)))
    return 0


def cmd_verify_all(args):
    from .acceptance import run_all

    out = _out_dir(args, "verify-all")
    t0 = time.time()
    results = run_all(quick=args.quick)
    rows = [(r.name, "PASS" if r.passed else "FAIL", r.seconds, json.dumps(r.details, default=float)) for r in results]
    vio.write_csv(os.path.join(out, "results.csv"), ["check", "status", "seconds", "details"], rows)
    n_pass = sum(r.passed for r in results)
    vio.write_manifest(
        os.path.join(out, "manifest.json"),
        _config_dict(args, "verify-all"),
        {"passed": n_pass, "total": len(results)},
        time.time() - t0,
    )
    print(f"{n_pass}/{len(results)} checks passed")
    return 0 if n_pass == len(results) else 3


def build_parser():
    parser = argparse.ArgumentParser(prog="vrlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, physics=True):
        p.add_argument("--out", default=None, help="output root (default $VRLAB_OUT or ./vrlab-out)")
        p.add_argument("--config", default=None, help="JSON config file; flags override file values")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=None)
        if physics:
            p.add_argument("--kappa", type=float, default=None, help="circulation (default: thin-ring value)")
            p.add_argument("--W", type=float, default=None, help="speed coefficient (default: thin-ring value)")
            p.add_argument("--eps", type=float, default=None)
            p.add_argument("--p", type=float, default=2.0)
            p.add_argument("--grid", default="512x512", help="NRxNZ cells")
            p.add_argument("--domain", default="0,4,-2,2", help="r0,r1,z0,z1")

    p = sub.add_parser("ground-state", help="solve the unit-disc ground state")
    common(p)
    p.set_defaults(fn=cmd_ground_state)

    p = sub.add_parser("green-check", help="kernel asymptotic-error tables")
    common(p, physics=False)
    p.add_argument("--quad-order", type=int, default=32)
    p.set_defaults(fn=cmd_green_check)

    p = sub.add_parser("ring-params", help="solve the thin-ring parameter system")
    common(p)
    p.set_defaults(fn=cmd_ring_params)

    p = sub.add_parser("solve-steady", help="converge a steady ring")
    common(p)
    p.add_argument("--seed-kind", choices=["asymptotic", "patch"], default="asymptotic")
    p.add_argument("--seed-radius", type=float, default=None)
    p.add_argument("--seed-center", type=float, default=None)
    p.set_defaults(fn=cmd_solve_steady)

    p = sub.add_parser("approx-compare", help="solved ring vs asymptotic construction")
    common(p)
    p.add_argument("--seed-kind", choices=["asymptotic", "patch"], default="asymptotic")
    p.add_argument("--seed-radius", type=float, default=None)
    p.add_argument("--seed-center", type=float, default=None)
    p.set_defaults(fn=cmd_approx_compare)

    p = sub.add_parser("maximize", help="rearrangement-class energy maximization")
    common(p)
    p.add_argument("--from-ring", default=None, help="directory of a saved solve-steady run")
    p.add_argument("--max-iter", type=int, default=300)
    p.add_argument("--seed-kind", choices=["asymptotic", "patch"], default="asymptotic")
    p.add_argument("--seed-radius", type=float, default=None)
    p.add_argument("--seed-center", type=float, default=None)
    p.set_defaults(fn=cmd_maximize)

    p = sub.add_parser("evolve", help="semi-Lagrangian transport of a ring")
    common(p)
    p.add_argument("--T", type=float, default=2.0)
    p.add_argument("--cfl", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=0.0, help="perturbation size as a fraction of kappa")
    p.add_argument("--seed-kind", choices=["asymptotic", "patch"], default="asymptotic")
    p.add_argument("--seed-radius", type=float, default=None)
    p.add_argument("--seed-center", type=float, default=None)
    p.set_defaults(fn=cmd_evolve)

    p = sub.add_parser("verify-all", help="run the acceptance suite")
    common(p, physics=False)
    p.add_argument("--quick", action="store_true", help="reduced-size smoke profile")
    p.set_defaults(fn=cmd_verify_all)

    return parser


def _merge_config(args):
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        for key, value in file_cfg.items():
            attr = key.replace("-", "_")
            if getattr(args, attr, None) in (None, 0.0) or (
                attr in ("grid", "domain", "p") and f"--{key}" not in sys.argv
            ):
                setattr(args, attr, value)
    return args


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args)
        if getattr(args, "threads", None):
            set_num_threads(args.threads)
        if getattr(args, "seed", None):
            np.random.seed(args.seed)
        _validate_physical(args) if hasattr(args, "kappa") else None
        if args.command in ("solve-steady", "approx-compare", "evolve") and args.eps is None:
            raise ValidationError(f"{args.command} requires --eps")
        if args.command == "maximize" and args.eps is None and not args.from_ring:
            raise ValidationError("maximize requires --eps or --from-ring")
        return args.fn(args)
    except (ValidationError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ShootingError, ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
