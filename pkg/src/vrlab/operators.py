"""Finite-volume discretization of the weighted half-plane operator.

The operator -(1/x1) div((1/x1) grad psi) has the weak form
int (1/x1) grad psi . grad phi dx = int zeta phi dnu, so the assembled
matrix M (face-transmissibility stiffness) is symmetric positive definite
and the discrete problem reads M psi = nu * zeta + boundary data.

Radial face transmissibilities use the exact 1D resistance of the 1/x1
coefficient, int x1 dx1 across the face gap, which is what makes the wall
flux at the axis finite; cell-center radii never touch x1 = 0.

The inverse against the nu-weighted load is also the discrete interaction
form: energy(zeta) = (1/2) (nu zeta) . M^{-1} (nu zeta) is exactly
symmetric PSD, which the rearrangement ascent loop relies on.
"""

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .fields import STREAM, ScalarField


class GridOperator:
    """Assembled, factorized weighted-Poisson operator on one grid."""

    def __init__(self, grid):
        self.grid = grid
        nr, nz = grid.nr, grid.nz
        rc = grid.rc
        hr, hz = grid.hr, grid.hz

        # radial faces: resistance int r dr between the flanking points
        r_face_t = hz / (hr * 0.5 * (rc[:-1] + rc[1:]))  # interior, shape (nr-1,)
        if grid.r_min == 0.0:
            t_axis = hz / (0.5 * rc[0] ** 2)  # wall psi = 0 at the axis
        else:
            t_axis = hz / (0.5 * (rc[0] ** 2 - grid.r_min**2))
        t_outer = hz / (0.5 * (grid.r_max**2 - rc[-1] ** 2))
        # z faces: coefficient 1/r constant along the path
        z_face_t = hr / (hz * rc)  # per radius, shape (nr,)
        t_zwall = 2.0 * hr / (hz * rc)

        n = nr * nz
        idx = np.arange(n).reshape(nr, nz)
        rows, cols, vals = [], [], []
        diag = np.zeros(n)

        def add_face(a, b, t):
            rows.append(a)
            cols.append(b)
            vals.append(-t)
            rows.append(b)
            cols.append(a)
            vals.append(-t)
            np.add.at(diag, a, t)
            np.add.at(diag, b, t)

        a = idx[:-1, :].ravel()
        b = idx[1:, :].ravel()
        add_face(a, b, np.repeat(r_face_t, nz))
        a = idx[:, :-1].ravel()
        b = idx[:, 1:].ravel()
        add_face(a, b, np.tile(z_face_t, (nz - 1, 1)).T.ravel())

        # Dirichlet faces contribute only to the diagonal; boundary values
        # enter the right-hand side through the same transmissibilities.
        np.add.at(diag, idx[0, :], t_axis)
        np.add.at(diag, idx[-1, :], t_outer)
        np.add.at(diag, idx[:, 0], t_zwall)
        np.add.at(diag, idx[:, -1], t_zwall)

        rows.append(np.arange(n))
        cols.append(np.arange(n))
        vals.append(diag)
        rows = np.concatenate([np.asarray(r).ravel() for r in rows])
        cols = np.concatenate([np.asarray(c).ravel() for c in cols])
        vals = np.concatenate([np.asarray(v, dtype=float).ravel() for v in vals])
        self.matrix = sp.csc_matrix(sp.coo_matrix((vals, (rows, cols)), shape=(n, n)))
        self._t_axis = t_axis
        self._t_outer = t_outer
        self._t_zwall = t_zwall
        self._lu = None

    @property
    def lu(self):
        if self._lu is None:
            self._lu = splu(self.matrix)
        return self._lu

    def boundary_rhs(self, bc_values):
        """Accumulate Dirichlet boundary data into a load vector.

        ``bc_values`` maps side name ('axis', 'outer', 'z_lo', 'z_hi') to a
        value array along that side (or scalar).  The axis side is the
        homogeneous wall and is normally omitted.
        """
        grid = self.grid
        rhs = np.zeros((grid.nr, grid.nz))
        if not bc_values:
            return rhs
        if "axis" in bc_values:
            rhs[0, :] += self._t_axis * np.asarray(bc_values["axis"])
        if "outer" in bc_values:
            rhs[-1, :] += self._t_outer * np.asarray(bc_values["outer"])
        if "z_lo" in bc_values:
            rhs[:, 0] += self._t_zwall * np.asarray(bc_values["z_lo"])
        if "z_hi" in bc_values:
            rhs[:, -1] += self._t_zwall * np.asarray(bc_values["z_hi"])
        return rhs

    def solve_values(self, zeta_values, bc_values=None):
        grid = self.grid
        rhs = grid.nu * zeta_values + self.boundary_rhs(bc_values or {})
        psi = self.lu.solve(rhs.ravel())
        return psi.reshape(grid.nr, grid.nz)

    def solve(self, zeta, bc_values=None):
        """Stream field with apply(psi) = zeta and Dirichlet data."""
        return ScalarField(self.grid, self.solve_values(zeta.values, bc_values), STREAM)

    def apply_values(self, psi_values):
        out = self.matrix @ psi_values.ravel()
        return out.reshape(self.grid.nr, self.grid.nz) / self.grid.nu

    def apply(self, psi):
        """Discrete operator action; exact inverse of solve at zero bc."""
        return ScalarField(self.grid, self.apply_values(psi.values), STREAM)

    def stream_values(self, zeta_values):
        """Interaction-operator action nu-solve with zero far data."""
        return self.solve_values(zeta_values)

    def energy(self, zeta_values):
        """(1/2) <nu zeta, M^{-1} nu zeta>; exactly symmetric PSD in zeta."""
        load = (self.grid.nu * zeta_values).ravel()
        return 0.5 * float(load @ self.lu.solve(load))

    def residual(self, psi_values, zeta_values, bc_values=None):
        rhs = self.grid.nu * zeta_values + self.boundary_rhs(bc_values or {})
        res = self.matrix @ psi_values.ravel() - rhs.ravel()
        scale = max(float(np.abs(rhs).max()), 1e-300)
        return float(np.abs(res).max()) / scale
