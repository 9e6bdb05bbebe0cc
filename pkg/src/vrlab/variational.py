"""Rearrangement-constrained energy maximization by the vorticity method.

Each sweep alternates two moves that can only raise the penalized energy
E - W P: a bathtub step placing the class's largest values on the highest
level sets of Phi = (interaction stream) - (W/2) x1^2 (the exact optimum of
the linear functional over the relaxed class, with atoms split across cell
boundaries), and a Steiner symmetrization.  With a symmetric positive
semidefinite interaction form the bathtub ascent identity

    E(z') - E(z) = int (z' - z) Phi dnu + E(z' - z)

makes monotonicity exact up to roundoff, so the energy trace certifies the
run.  Two interaction backends share one contract: the factorized grid
operator (PSD by construction, used at scale) and the explicit kernel
matrix (small grids; carries the analytic self-cell diagonal).

Cell placement order breaks Phi ties lexicographically by (x1, x2), which
keeps runs deterministic on the lattice where level sets have positive
measure (the continuum argument gets measure zero for free).
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .fields import (
    VORTICITY,
    RearrangementClass,
    ScalarField,
    class_of,
    impulse,
    kernel_matrix,
    same_class,
    steiner_symmetrize,
)
from .operators import GridOperator


class GridInteraction:
    """Interaction through the factorized grid operator (zero far data).

    ``background`` is an optional fixed stream lift (e.g. the harmonic
    extension of single-ring far-field data); it enters the potential and
    the energy linearly, so the ascent identity stays exact while the
    truncated-domain functional tracks its free-space counterpart.
    """

    def __init__(self, grid, operator=None, background=None):
        self.grid = grid
        self.op = operator if operator is not None else GridOperator(grid)
        self.background = background

    def stream(self, zeta_values):
        psi = self.op.stream_values(zeta_values)
        if self.background is not None:
            psi = psi + self.background
        return psi

    def energy(self, zeta_values):
        quad = self.op.energy(zeta_values)
        if self.background is not None:
            quad += float(np.sum(zeta_values * self.background * self.grid.nu))
        return quad


def ring_background(grid, operator, kappa, center):
    """Harmonic lift of single-ring far-field data for GridInteraction."""
    from .steady import ring_boundary_values

    zeros = np.zeros((grid.nr, grid.nz))
    return operator.solve_values(zeros, ring_boundary_values(grid, kappa, center))


class KernelInteraction:
    """Dense kernel-matrix interaction; small grids only."""

    def __init__(self, grid):
        self.grid = grid
        if grid.nr * grid.nz > 96 * 96:
            raise ValueError("kernel backend is dense; use the grid backend at scale")
        self.matrix = kernel_matrix(grid)

    def stream(self, zeta_values):
        load = (zeta_values * self.grid.nu).ravel()
        return (self.matrix @ load).reshape(self.grid.nr, self.grid.nz)

    def energy(self, zeta_values):
        load = (zeta_values * self.grid.nu).ravel()
        return 0.5 * float(load @ (self.matrix @ load))


def potential(zeta_values, w_speed, interaction):
    """Phi = stream - (W/2) x1^2 on the interaction's grid."""
    rr = interaction.grid.rc[:, None]
    return interaction.stream(zeta_values) - 0.5 * w_speed * rr**2


def place_class(cls, phi, grid):
    """Distribute a rearrangement class over cells in decreasing Phi order.

    Atoms larger than a cell's nu-mass split exactly; a cell straddling two
    atoms receives their mass-weighted mean (the relaxed-class optimum of
    the linear functional).  Placement stops at cells with Phi <= 0: over
    the relaxed class, parking nonnegative values there could only lower
    the objective, so the remainder is shed (returned as dropped mass).
    Returns (values, dropped_mass).
    """
    rr, zz = grid.mesh()
    order = np.lexsort((zz.ravel(), rr.ravel(), -phi.ravel()))
    positive = np.count_nonzero(phi > 0.0)
    order = order[:positive]
    caps = grid.nu.ravel()[order]
    edges = np.concatenate([[0.0], np.cumsum(caps)])
    total = min(cls.total_mass, edges[-1])

    atom_edges = np.concatenate([[0.0], np.cumsum(cls.masses)])
    atom_int = np.concatenate([[0.0], np.cumsum(cls.values * cls.masses)])

    def integral(s):
        s = np.clip(s, 0.0, total)
        k = np.clip(np.searchsorted(atom_edges, s, side="right") - 1, 0, cls.values.size - 1)
        return atom_int[k] + cls.values[k] * (s - atom_edges[k])

    cell_mass_value = integral(edges[1:]) - integral(edges[:-1])
    vals = np.zeros(grid.nr * grid.nz)
    if order.size:
        vals[order] = cell_mass_value / caps
    return vals.reshape(grid.nr, grid.nz), cls.total_mass - total


def bathtub_step(zeta, w_speed, interaction, cls=None):
    """One linear-maximization move; returns the new field."""
    cls = cls if cls is not None else class_of(zeta)
    phi = potential(zeta.values, w_speed, interaction)
    vals, _ = place_class(cls, phi, zeta.grid)
    return zeta.with_values(vals)


@dataclass
class MaximizerRun:
    zeta0_class: RearrangementClass
    w_speed: float
    energies: list
    result: ScalarField
    mu_tilde: float
    profile_fit: float
    iterations: int
    stagnated: bool = False
    interaction: object = dc_field(repr=False, default=None)

    @property
    def energy(self):
        return self.energies[-1]


def maximize(zeta0, w_speed, max_iter=500, tol=1e-10, symmetrize_every=1, interaction=None, threshold_tol=1e-2):
    """Alternate bathtub and Steiner moves until the energy gain stalls.

    The Steiner move is accepted only when it does not lower the penalized
    energy (on the lattice the rearrangement inequality is a numerical fact,
    not a theorem; the guard keeps the trace monotone by construction).
    """
    grid = zeta0.grid
    inter = interaction if interaction is not None else GridInteraction(grid)
    cls = class_of(zeta0)
    zeta = zeta0

    def penalized(values):
        return inter.energy(values) - w_speed * 0.5 * float(np.sum(values * (grid.rc[:, None] ** 2) * grid.nu))

    energies = [penalized(zeta.values)]
    stagnated = False
    for it in range(1, max_iter + 1):
        new = bathtub_step(zeta, w_speed, inter, cls)
        if symmetrize_every and it % symmetrize_every == 0:
            sym = steiner_symmetrize(new)
            if penalized(sym.values) >= penalized(new.values):
                new = sym
        e_new = penalized(new.values)
        gain = e_new - energies[-1]
        if gain < -1e-9 * max(abs(e_new), 1.0):
            stagnated = True
            break
        zeta = new
        energies.append(e_new)
        if gain < tol * max(abs(e_new), 1e-300):
            break
    mu_tilde, fit = recover_profile(zeta, w_speed, inter)
    return MaximizerRun(
        zeta0_class=cls,
        w_speed=w_speed,
        energies=energies,
        result=zeta,
        mu_tilde=mu_tilde,
        profile_fit=fit,
        iterations=len(energies) - 1,
        stagnated=stagnated,
        interaction=inter,
    )


def _isotonic_fit(x, y, w):
    """Weighted nondecreasing least-squares fit (pool adjacent violators)."""
    order = np.argsort(x, kind="stable")
    y = y[order]
    w = w[order]
    level_y = list(y)
    level_w = list(w)
    sizes = [1] * len(y)
    i = 0
    while i < len(level_y) - 1:
        if level_y[i] > level_y[i + 1] + 0.0:
            tot = level_w[i] + level_w[i + 1]
            level_y[i] = (level_y[i] * level_w[i] + level_y[i + 1] * level_w[i + 1]) / tot
            level_w[i] = tot
            sizes[i] += sizes[i + 1]
            del level_y[i + 1], level_w[i + 1], sizes[i + 1]
            while i > 0 and level_y[i - 1] > level_y[i]:
                tot = level_w[i - 1] + level_w[i]
                level_y[i - 1] = (level_y[i - 1] * level_w[i - 1] + level_y[i] * level_w[i]) / tot
                level_w[i - 1] = tot
                sizes[i - 1] += sizes[i]
                del level_y[i], level_w[i], sizes[i]
                i -= 1
        else:
            i += 1
    fit_sorted = np.repeat(level_y, sizes)
    fit = np.empty_like(fit_sorted)
    fit[order] = fit_sorted
    return fit


def recover_profile(zeta, w_speed, interaction):
    """Threshold mu-tilde and the monotone-profile defect of zeta vs Phi.

    mu-tilde is the largest Phi over empty cells adjacent to the support;
    the defect is the L1(nu) distance of the (Phi, zeta) scatter from its
    isotonic regression, near zero when zeta is a nondecreasing function of
    Phi - mu-tilde.
    """
    grid = zeta.grid
    phi = potential(zeta.values, w_speed, interaction)
    support = zeta.values > 0
    if not support.any():
        return 0.0, 0.0
    empty = ~support
    if empty.any():
        # sup over the whole vanishing set; on the truncated grid the axis
        # column caps it below by -(W/2)(hr/2)^2, the lattice trace of the
        # continuum nonnegativity
        mu_tilde = float(phi[empty].max())
    else:
        mu_tilde = float(phi[support].min())  # support fills the grid
    shell = _dilate(support, 2) & ~support
    region = support | shell
    x = phi[region].ravel()
    y = zeta.values[region].ravel()
    w = grid.nu[region].ravel()
    fit = _isotonic_fit(x, y, w)
    defect = float(np.sum(np.abs(fit - y) * w))
    return mu_tilde, defect


def _dilate(mask, width):
    out = mask.copy()
    for _ in range(width):
        grown = out.copy()
        grown[1:, :] |= out[:-1, :]
        grown[:-1, :] |= out[1:, :]
        grown[:, 1:] |= out[:, :-1]
        grown[:, :-1] |= out[:, 1:]
        out = grown
    return out


def gamma_one_argmax(kappa, W):
    """Maximizer of kappa t / 2 pi - W t^2, the limiting ring radius."""
    return kappa / (4.0 * math.pi * W)


def support_radii_on_axis(zeta, center_z=None):
    """(A, B): inner and outer support radii on the symmetry row."""
    grid = zeta.grid
    if center_z is None:
        r, z, v, nu = zeta.support_points()
        w = v * nu
        center_z = float((z * w).sum() / w.sum())
    j = int(np.clip(round((center_z - grid.z_min) / grid.hz - 0.5), 0, grid.nz - 1))
    row = zeta.values[:, j] > 0
    if not row.any():
        return float("nan"), float("nan")
    idx = np.nonzero(row)[0]
    return float(grid.rc[idx.min()]), float(grid.rc[idx.max()])


def asymptotic_report(run, kappa, W, eps):
    """Concentration diagnostics of a converged maximizer."""
    zeta = run.result
    grid = zeta.grid
    r, z, v, nu = zeta.support_points()
    w = v * nu
    centroid_r = float((r * w).sum() / w.sum())
    pts = np.stack([r, z], axis=1)
    diam = 0.0
    for ang in np.linspace(0.0, np.pi, 64, endpoint=False):
        proj = pts @ np.array([math.cos(ang), math.sin(ang)])
        diam = max(diam, float(proj.max() - proj.min()))
    a_in, b_out = support_radii_on_axis(zeta)
    r_star = gamma_one_argmax(kappa, W)
    return {
        "diameter": diam,
        "diameter_over_eps": diam / eps,
        "a_inner": a_in,
        "b_outer": b_out,
        "centroid_r": centroid_r,
        "r_star": r_star,
        "centroid_defect": abs(centroid_r - r_star),
        "impulse": impulse(zeta),
        "impulse_limit": 0.5 * kappa * r_star**2,
        "mu_tilde": run.mu_tilde,
        "profile_fit": run.profile_fit,
        "energy": run.energy,
    }
