import numpy as np
import pytest

from vrlab._core import ring_stream_sum
from vrlab.fields import STREAM, ScalarField, symmetric_grid
from vrlab.operators import GridOperator


@pytest.fixture(scope="module")
def op128():
    return GridOperator(symmetric_grid(2.0, 1.0, 128))


def test_zero_maps_to_zero(op128):
    g = op128.grid
    zero = ScalarField(g, np.zeros((g.nr, g.nz)))
    psi = op128.solve(zero)
    assert np.abs(psi.values).max() == 0.0
    back = op128.apply(psi)
    assert np.abs(back.values).max() == 0.0


def test_manufactured_solution_second_order():
    # psi = x1^2 exp(-x1^2 - x2^2) with symbolic forcing
    import sympy as sp

    x, z = sp.symbols("x z", positive=True)
    psi_s = x**2 * sp.exp(-(x**2) - z**2)
    forcing = -(1 / x) * sp.diff((1 / x) * sp.diff(psi_s, x), x) - (1 / x**2) * sp.diff(psi_s, z, 2)
    f = sp.lambdify((x, z), sp.simplify(forcing), "numpy")
    exact = sp.lambdify((x, z), psi_s, "numpy")
    errs = []
    for n in (64, 128, 256):
        g = symmetric_grid(6.0, 6.0, n)
        rr, zz = g.mesh()
        op = GridOperator(g)
        psi = op.solve_values(
            f(rr, zz),
            bc_values={
                "outer": exact(g.r_max, g.zc),
                "z_lo": exact(g.rc, g.z_min),
                "z_hi": exact(g.rc, g.z_max),
            },
        )
        errs.append(np.abs(psi - exact(rr, zz)).max())
    orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) > 1.8


def test_solve_matches_green_sum_with_far_field_data():
    errs = []
    for n in (128, 256):
        g = symmetric_grid(2.0, 1.0, n)
        op = GridOperator(g)
        vals = np.zeros((g.nr, g.nz))
        i, j = g.index_of(1.0, 0.0)
        vals[i, j] = 1.0 / g.nu[i, j]
        src_r, src_z, w = np.array([g.rc[i]]), np.array([g.zc[j]]), np.array([1.0])
        bc = {
            "outer": ring_stream_sum(np.full(g.nz, g.r_max), g.zc, src_r, src_z, w),
            "z_lo": ring_stream_sum(g.rc, np.full(g.nr, g.z_min), src_r, src_z, w),
            "z_hi": ring_stream_sum(g.rc, np.full(g.nr, g.z_max), src_r, src_z, w),
        }
        psi = op.solve_values(vals, bc)
        rr, zz = g.mesh()
        mask = (np.hypot(rr - 1.0, zz) > 0.15) & (np.hypot(rr - 1.0, zz) < 0.4)
        direct = ring_stream_sum(rr[mask], zz[mask], src_r, src_z, w)
        errs.append(np.abs(psi[mask] - direct).max() / np.abs(direct).max())
    assert errs[1] < errs[0] / 3.0
    assert errs[1] < 5e-4


def test_apply_inverts_solve(op128):
    rng = np.random.default_rng(0)
    g = op128.grid
    zeta = np.zeros((g.nr, g.nz))
    zeta[30:90, 40:80] = rng.uniform(size=(60, 40))
    psi = op128.solve_values(zeta)
    back = op128.apply_values(psi)
    assert np.abs(back - zeta).max() < 1e-10 * np.abs(zeta).max()


def test_reflection_symmetry(op128):
    # symmetric load -> symmetric solution to roundoff
    g = op128.grid
    rng = np.random.default_rng(1)
    half = rng.uniform(size=(g.nr, g.nz // 2))
    zeta = np.concatenate([half, half[:, ::-1]], axis=1)
    psi = op128.solve_values(zeta)
    assert np.abs(psi - psi[:, ::-1]).max() < 1e-12 * np.abs(psi).max()


def test_energy_form_psd(op128):
    rng = np.random.default_rng(2)
    g = op128.grid
    for _ in range(5):
        h = rng.standard_normal((g.nr, g.nz))
        assert op128.energy(h) >= 0.0


def test_energy_matches_quadratic_identity(op128):
    # E(a+b) - E(a) - E(b) = <nu a, M^-1 nu b> symmetric in (a, b)
    rng = np.random.default_rng(3)
    g = op128.grid
    a = rng.standard_normal((g.nr, g.nz))
    b = rng.standard_normal((g.nr, g.nz))
    cross = op128.energy(a + b) - op128.energy(a) - op128.energy(b)
    psi_b = op128.solve_values(b)
    direct = float(np.sum(a * psi_b * g.nu))
    assert cross == pytest.approx(direct, rel=1e-10)


def test_residual_reports_small(op128):
    g = op128.grid
    rng = np.random.default_rng(4)
    zeta = rng.uniform(size=(g.nr, g.nz))
    psi = op128.solve_values(zeta)
    assert op128.residual(psi, zeta) < 1e-11
