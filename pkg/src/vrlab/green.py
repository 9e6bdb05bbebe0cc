"""Green function of the weighted half-plane operator and its asymptotics.

The kernel is defined by the angular integral

    G1(x, y) = (x1 y1 / 4 pi) * int_{-pi}^{pi} cos(t) dt
               / sqrt((x2-y2)^2 + x1^2 + y1^2 - 2 x1 y1 cos(t))

evaluated here by panel Gauss-Legendre quadrature graded toward t = 0 where
the integrand peaks for nearby points; this quadrature path is the normative
reference.  A complete-elliptic-integral reduction (the compiled kernel) is
used internally for bulk evaluation and is tested against the quadrature.

Writing rho = |x - y|^2 / (x1 y1), the kernel factors exactly as
G1 = sqrt(x1 y1) * Phi(rho), which reduces the envelope calibration of the
pointwise bound to a one-dimensional sweep in rho.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from ._core import ring_kernel

LN8 = math.log(8.0)


class HalfPlanePoint(NamedTuple):
    x1: float
    x2: float


class CoincidentPointsError(ValueError):
    """The kernel is singular on the diagonal."""


@dataclass(frozen=True)
class GreenConfig:
    """Quadrature order per panel and the rho thresholds that pick which
    asymptotic expansion serves as the local reference."""

    quad_order: int = 24
    rho_switch_near: float = 1e-2
    rho_switch_far: float = 10.0

    def __post_init__(self):
        if not 0 < self.rho_switch_near < self.rho_switch_far:
            raise ValueError("need 0 < rho_switch_near < rho_switch_far")
        if self.quad_order < 2:
            raise ValueError("quad_order must be >= 2")


DEFAULT_CONFIG = GreenConfig()


def _check_pair(x, y):
    x1, x2 = float(x[0]), float(x[1])
    y1, y2 = float(y[0]), float(y[1])
    if x1 <= 0 or y1 <= 0:
        raise ValueError("first coordinates must be positive in the half plane")
    return x1, x2, y1, y2


def rho(x, y):
    """Normalized squared separation |x-y|^2 / (x1 y1); zero iff x = y."""
    x1, x2, y1, y2 = _check_pair(x, y)
    return ((x1 - y1) ** 2 + (x2 - y2) ** 2) / (x1 * y1)


@lru_cache(maxsize=32)
def _gauss(order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return nodes, weights


def _phi_quadrature(rho_val, order):
    """Phi(rho) = (1/4pi) int_{-pi}^{pi} cos t / sqrt(rho + 2 - 2 cos t) dt."""
    nodes, weights = _gauss(order)
    width = math.sqrt(rho_val) if rho_val < (math.pi / 4) ** 2 else math.pi / 4
    edges = [0.0]
    e = width
    while e < math.pi:
        edges.append(e)
        e *= 4.0
    edges.append(math.pi)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        t = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        f = np.cos(t) / np.sqrt(rho_val + 4.0 * np.sin(0.5 * t) ** 2)
        total += 0.5 * (b - a) * float(weights @ f)
    return total / (2.0 * math.pi)  # doubled [0, pi] half-range, / 4pi


def g1(x, y, cfg=DEFAULT_CONFIG):
    """Normative quadrature evaluation of the kernel for one point pair."""
    x1, x2, y1, y2 = _check_pair(x, y)
    r = ((x1 - y1) ** 2 + (x2 - y2) ** 2) / (x1 * y1)
    if r == 0.0:
        raise CoincidentPointsError(f"kernel singular at coincident points {x}")
    return math.sqrt(x1 * y1) * _phi_quadrature(r, cfg.quad_order)


def g1_elliptic(x, y):
    """Fast closed-form evaluation (complete elliptic integrals); internal path."""
    x1, x2, y1, y2 = _check_pair(x, y)
    if x1 == y1 and x2 == y2:
        raise CoincidentPointsError(f"kernel singular at coincident points {x}")
    return float(ring_kernel(x1, x2, y1, y2))


def g1_near(x, y):
    """Leading near-diagonal expansion sqrt(x1 y1)/(4pi) (ln(1/rho) + 2 ln 8 - 4)."""
    x1, x2, y1, y2 = _check_pair(x, y)
    r = rho(x, y)
    return math.sqrt(x1 * y1) / (4.0 * math.pi) * (math.log(1.0 / r) + 2.0 * LN8 - 4.0)


def g1_far(x, y):
    """Leading far-field expansion sqrt(x1 y1)/4 * rho^{-3/2}."""
    x1, x2, y1, y2 = _check_pair(x, y)
    r = rho(x, y)
    return math.sqrt(x1 * y1) / 4.0 * r ** (-1.5)


@lru_cache(maxsize=32)
def calibrate_bound_constant(delta, order=32):
    """Envelope constant C_delta with G1 <= C_delta (x1 y1)^{delta+1/2} |x-y|^{-2 delta}.

    Because G1/sqrt(x1 y1) depends on rho alone, C_delta is the maximum of
    Phi(rho) rho^delta over a dense logarithmic sweep (finite for
    0 < delta < 3/2), padded by 5 percent.
    """
    if not 0.0 < delta < 1.5:
        raise ValueError("delta must lie in (0, 3/2)")
    rhos = np.logspace(-10, 10, 2001)
    vals = np.array([_phi_quadrature(r, order) * r**delta for r in rhos])
    return 1.05 * float(vals.max())


def bound_check(x, y, delta, cfg=DEFAULT_CONFIG):
    """True if the calibrated pointwise bound holds at this pair."""
    x1, x2, y1, y2 = _check_pair(x, y)
    c = calibrate_bound_constant(delta)
    dist2 = (x1 - y1) ** 2 + (x2 - y2) ** 2
    if dist2 == 0.0:
        return True
    lhs = g1(x, y, cfg)
    return lhs <= c * (x1 * y1) ** (delta + 0.5) / dist2**delta


def g_halfplane(x, y):
    """Green function of -Laplace on the half plane with Dirichlet data at x1=0."""
    x1, x2, y1, y2 = _check_pair(x, y)
    num = (x1 + y1) ** 2 + (x2 - y2) ** 2
    den = (x1 - y1) ** 2 + (x2 - y2) ** 2
    if den == 0.0:
        raise CoincidentPointsError(f"log kernel singular at coincident points {x}")
    return math.log(num / den) / (4.0 * math.pi)


def decompose_h(x, y, anchor_x1, cfg=None):
    """Regular part H(x,y) = y1 G1(x,y) - anchor_x1^2 G(x,y).

    The log singularities cancel when anchor_x1 matches the common radius of
    nearly coincident points, leaving H bounded on the diagonal approach.
    ``cfg`` switches the kernel factor to the normative quadrature.
    """
    x1, x2, y1, y2 = _check_pair(x, y)
    kernel = g1(x, y, cfg) if cfg is not None else g1_elliptic(x, y)
    return y1 * kernel - anchor_x1**2 * g_halfplane(x, y)


def asymptotic_error_table(cfg=DEFAULT_CONFIG, rhos=None, x1=1.0, y1=1.0):
    """Rows (rho, g1, near, far, rel_err_near, rel_err_far) for CSV dumps."""
    if rhos is None:
        rhos = np.logspace(-6, 4, 41)
    rows = []
    for r in rhos:
        dz = math.sqrt(r * x1 * y1 - (x1 - y1) ** 2)
        xx, yy = (x1, 0.0), (y1, dz)
        val = g1(xx, yy, cfg)
        near = g1_near(xx, yy)
        far = g1_far(xx, yy)
        rows.append((r, val, near, far, abs(val - near) / abs(val), abs(val - far) / abs(val)))
    return rows
