import math

import numpy as np
import pytest

from vrlab.green import (
    CoincidentPointsError,
    GreenConfig,
    bound_check,
    calibrate_bound_constant,
    decompose_h,
    g1,
    g1_elliptic,
    g1_far,
    g1_near,
    g_halfplane,
    rho,
)

CFG = GreenConfig()
ORACLE_CFG = GreenConfig(quad_order=240)  # 10x node count


def random_pairs(n, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        x = (rng.uniform(0.2, 3.0), rng.uniform(-2.0, 2.0))
        y = (rng.uniform(0.2, 3.0), rng.uniform(-2.0, 2.0))
        if (x[0] - y[0]) ** 2 + (x[1] - y[1]) ** 2 > 1e-12:
            yield x, y


def test_rho_examples():
    assert rho((1.0, 0.5), (1.0, 0.5)) == 0.0
    assert rho((1, 0), (1, 1)) == pytest.approx(1.0)
    assert rho((2, 0), (1, 3)) == pytest.approx(5.0)


def test_symmetry():
    for x, y in random_pairs(25):
        assert g1(x, y, CFG) == pytest.approx(g1(y, x, CFG), rel=1e-12)
        assert g1_elliptic(x, y) == pytest.approx(g1_elliptic(y, x), rel=1e-12)


def test_positivity():
    for x, y in random_pairs(25, seed=1):
        assert g1(x, y, CFG) > 0.0


def test_quadrature_matches_elliptic_reduction():
    # dual-route: normative quadrature vs closed-form reduction
    for x, y in random_pairs(40, seed=2):
        assert g1(x, y, CFG) == pytest.approx(g1_elliptic(x, y), rel=1e-11)


def test_axis_decay():
    # prefactor x1 y1 forces decay to zero approaching the axis
    prev = None
    for t in (1e-2, 1e-3, 1e-4):
        val = g1((t, 0.0), (1.0, 0.0), CFG)
        assert val > 0
        if prev is not None:
            assert val < prev
        prev = val
    assert prev < 1e-3


def test_near_asymptotic_small_separation():
    # delta = 1e-3 along x2: remainder of order rho*ln(1/rho)
    x, y = (1.0, 0.0), (1.0, 1e-3)
    r = rho(x, y)
    val = g1(x, y, ORACLE_CFG)
    near = g1_near(x, y)
    assert abs(val - near) / val <= 5.0 * r * math.log(1.0 / r)


def test_near_remainder_fit():
    # |g1 - g1_near| <= C rho ln(1/rho) sqrt(x1 y1) with stable fitted C
    for scale in (0.5, 1.0, 2.0):
        cs = []
        for r in np.logspace(-5, -2, 10):
            x = (scale, 0.0)
            y = (scale, math.sqrt(r) * scale)
            err = abs(g1(x, y, ORACLE_CFG) - g1_near(x, y))
            cs.append(err / (r * math.log(1.0 / r) * scale))
        assert max(cs) < 1.0
        # fitted constant stable across the sweep (same order throughout)
        assert max(cs) / max(min(cs), 1e-12) < 20.0


def test_far_relative_error_rate():
    # relative error of the far expansion decays like 1/rho
    errs = []
    for r in (10.0, 100.0, 1000.0):
        x, y = (1.0, 0.0), (1.0, math.sqrt(r))
        val = g1(x, y, ORACLE_CFG)
        errs.append(abs(val - g1_far(x, y)) / val)
    assert errs[0] <= 5.0 / 10.0
    assert errs[1] <= 5.0 / 100.0
    assert errs[2] <= 5.0 / 1000.0
    # rate ~ rho^{-1}: each decade gains roughly a factor 10
    assert errs[1] / errs[0] < 0.2
    assert errs[2] / errs[1] < 0.2


def test_near_rho_one_value():
    # at rho = 1 the log term vanishes
    x, y = (1.0, 0.0), (1.0, 1.0)
    assert g1_near(x, y) == pytest.approx((2 * math.log(8.0) - 4.0) / (4 * math.pi))


@pytest.mark.parametrize("delta", [0.5, 1.0, 1.4])
def test_bound_holds_on_log_sweep(delta):
    # 1e3-pair sweep across log-spaced rho, mixed radii
    rng = np.random.default_rng(3)
    rhos = np.logspace(-5, 4, 1000)
    for r in rhos:
        x1 = rng.uniform(0.3, 3.0)
        y1 = x1 * rng.uniform(0.8, 1.25)
        gap2 = r * x1 * y1 - (x1 - y1) ** 2
        if gap2 <= 0:
            continue
        x, y = (x1, 0.0), (y1, math.sqrt(gap2))
        assert bound_check(x, y, delta)


def test_bound_diagonal_approach():
    for dz in (1e-2, 1e-4, 1e-6):
        assert bound_check((1.0, 0.0), (1.0, dz), 1.0)


def test_bound_adversarial_far():
    for r in np.logspace(1, 6, 25):
        assert bound_check((1.0, 0.0), (1.0, math.sqrt(r)), 1.4)


def test_bound_constant_is_positive_finite():
    for d in (0.5, 1.0, 1.4):
        c = calibrate_bound_constant(d)
        assert 0 < c < 10


def test_decompose_reconstructs():
    for x, y in random_pairs(10, seed=4):
        anchor = 1.3
        h = decompose_h(x, y, anchor)
        assert y[0] * g1_elliptic(x, y) == pytest.approx(anchor**2 * g_halfplane(x, y) + h, rel=1e-11)


def test_h_bounded_on_diagonal_approach():
    # matched anchor cancels the log singularities
    vals = []
    for dz in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
        vals.append(decompose_h((1.0, 0.0), (1.0, dz), 1.0))
    vals = np.array(vals)
    assert np.all(np.isfinite(vals))
    assert np.ptp(vals) < 0.05 * (1 + np.abs(vals).max())
    assert np.abs(vals).max() < 1.0


def test_g_halfplane_value():
    assert g_halfplane((1, 0), (1, 1)) == pytest.approx(math.log(5.0) / (4 * math.pi))


def test_errors():
    with pytest.raises(CoincidentPointsError):
        g1((1.0, 0.0), (1.0, 0.0), CFG)
    with pytest.raises(ValueError):
        g1((-1.0, 0.0), (1.0, 0.0), CFG)
    with pytest.raises(ValueError):
        rho((0.0, 0.0), (1.0, 0.0))
    with pytest.raises(ValueError):
        GreenConfig(rho_switch_near=10.0, rho_switch_far=1.0)
