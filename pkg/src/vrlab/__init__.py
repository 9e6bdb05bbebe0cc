"""vrlab: a numerical laboratory for concentrated steady vortex rings.

Builds, verifies and perturbs steady axisymmetric Euler rings: the unit-disc
ground state, the weighted half-plane Green function, steady-ring solves by
circulation-constrained fixed point iteration, the thin-ring parameter system
and its asymptotic predictions, rearrangement-constrained energy
maximization, and semi-Lagrangian transport with conservation monitors.
"""

from ._core import COMPILED

__all__ = ["COMPILED"]
__version__ = "0.1.0"
