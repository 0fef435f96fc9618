"""Sign check of the descent property of ``S_{a,r}`` along the wedge contours.

Along ``z(y) = A y + eps i y`` (``eps = +-1``) the function
``phi(y) = Re(S_{a,r}(z(y)) - c_1 z(y))``, ``c_1 = S'_{a,r}(0)``, is non-increasing on
``[0, pi]`` for small ``A > 0``; along the mirrored ray ``-A y + eps i y`` it is
non-decreasing.  ``descent_check`` samples ``phi`` on a grid and reports every point
where a centred finite difference has the wrong sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from hlpp.specfun.qseries import m_shift, s_ar_array, s_ar_derivative


@dataclass(frozen=True)
class DescentReport:
    a: float
    r: float
    A: float
    epsilon: int
    ys: np.ndarray = field(repr=False)
    derivative: np.ndarray = field(repr=False)
    violations: list[tuple[float, float]]

    @property
    def ok(self) -> bool:
        return not self.violations


def phi(y, a: float, r: float, A: float, epsilon: int = 1) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    z = (A + epsilon * 1j) * y
    return (s_ar_array(z, a, r) - m_shift(a, r) * z).real


def exact_derivative(y: float, a: float, r: float, A: float, epsilon: int = 1) -> float:
    """``phi'(y) = Re[(S'(z) - c_1)(A + eps i)]`` from the series for ``S'``."""
    z = (A + epsilon * 1j) * y
    return float(((s_ar_derivative(z, a, r) - m_shift(a, r)) * (A + epsilon * 1j)).real)


def descent_check(
    a: float, r: float, A: float, grid: int = 200, epsilon: int = 1, step: float | None = None, slack: float = 1e-8
) -> DescentReport:
    """Finite-difference sign check of ``phi'`` on ``grid`` equally spaced points of ``[0, pi]``.

    ``A > 0`` checks ``phi' <= 0``; ``A < 0`` (the mirrored contour) checks ``phi' >= 0``.
    A point is a violation if the wrong-signed derivative exceeds ``slack`` times the
    scale ``|c_1| (|A| + 1)`` of the derivative.  The default slack sits well above the
    rounding floor of the difference quotient (``~ eps |S| / step`` summed over the
    series terms), which near ``y = 0``, where ``phi'`` vanishes, is all that is left.
    """
    if A == 0:
        raise ValueError("A must be nonzero")
    if epsilon not in (1, -1):
        raise ValueError("epsilon must be +1 or -1")
    ys = np.linspace(0.0, math.pi, grid)
    h = step if step is not None else 1e-5
    # one-sided at the ends so the points stay inside [0, pi]
    lo = np.clip(ys - h, 0.0, math.pi)
    hi = np.clip(ys + h, 0.0, math.pi)
    deriv = (phi(hi, a, r, A, epsilon) - phi(lo, a, r, A, epsilon)) / (hi - lo)
    scale = abs(m_shift(a, r)) * (abs(A) + 1.0)
    wrong = deriv * math.copysign(1.0, A)  # should be <= 0
    bad = [(float(y), float(d)) for y, d, w in zip(ys, deriv, wrong) if w > slack * scale]
    return DescentReport(a, r, A, epsilon, ys, deriv, bad)
