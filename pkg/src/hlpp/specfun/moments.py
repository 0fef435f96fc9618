"""Contour-integral formulas for the moments ``E[t^{-k lam'_1}]`` of the Hall-Littlewood measure.

Two independent routes for the measure with finite variable lists ``X`` and ``Y``:

* ``nested``: the ``k``-fold integral over nested circles ``|z_1| > |z_2|/t > ...``

      E[t^{-k lam'_1}] = (2 pi i)^{-k} oint ... oint prod_{a<b} (z_a - z_b)/(z_a - z_b/t)
          prod_i prod_j (z_i - x_j/t)(1 - z_i y_j) / ((z_i - x_j)(1 - t z_i y_j)) dz_i / z_i,

  valid when the innermost circle encloses every ``x_j`` and the outermost one
  excludes every ``1/(t y_j)``;
* ``collapsed``: all contours shrunk to one circle ``|w| = 1/t``, picking up a sum over
  partitions ``lam`` of ``k`` of ``ell(lam)``-fold integrals

      (1/t - 1)^k k_t! / prod_i m_i(lam)! oint det[1/(w_i t^{-lam_i} - w_j)]
          prod_j prod_i (1 - x_i/(w_j t)) (1 - y_i w_j t^{1-lam_j})
                        / ((1 - x_i t^{lam_j - 1}/w_j) (1 - y_i w_j t)) dw_j / (2 pi i),

  with ``k_t! = prod_{i<=k} (1 - t^i)/(1 - t)``; valid for all ``y_j`` in ``(0, 1)``.

Both are evaluated with the periodic trapezoid rule on every circle.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

import numpy as np

from hlpp.specfun.contours import Contour, QuadratureRule


class ContourHypothesisError(ValueError):
    """The nested circles cannot be placed for these variables."""


def _partitions(k: int):
    def rec(n, cap):
        if n == 0:
            yield ()
            return
        for p in range(min(n, cap), 0, -1):
            for rest in rec(n - p, p):
                yield (p,) + rest

    return list(rec(k, k))


def nested_radii(k: int, x: Sequence[float], y: Sequence[float], t: float) -> list[float]:
    """Radii ``rho_1 > ... > rho_k`` with ``rho_k > max x``, ``rho_a > rho_{a+1}/t`` and ``rho_1 < 1/(t max y)``.

    The available room in ``log`` radius is split evenly between the ``k + 1`` gaps.
    Such circles exist iff ``max(x) max(y) < t^(k-2)``, which always holds for ``k <= 2``.
    """
    lo = math.log(max(x))
    hi = -math.log(t) - math.log(max(y))
    room = hi - lo - (k - 1) * -math.log(t)
    if room <= 0:
        raise ContourHypothesisError(
            f"nested contours need max(x) max(y) < t^(k-2); got {max(x) * max(y):.4g} >= {t ** (k - 2):.4g}"
        )
    gap = room / (k + 1)
    logs = [lo + gap]
    for _ in range(k - 1):
        logs.append(logs[-1] + gap - math.log(t))
    return [math.exp(v) for v in reversed(logs)]


def _single_factor(z: np.ndarray, x: Sequence[float], y: Sequence[float], t: float) -> np.ndarray:
    out = np.ones(z.shape, dtype=complex)
    for xj, yj in zip(x, y):
        out *= (z - xj / t) * (1 - z * yj) / ((z - xj) * (1 - t * z * yj))
    return out


def _check(k: int, x: Sequence[float], y: Sequence[float], t: float) -> None:
    if k not in (1, 2):
        raise ValueError("only k = 1 and k = 2 are supported")
    if len(x) != len(y) or not x:
        raise ValueError("X and Y must be nonempty and of equal length")
    if not all(0 < v < 1 for v in list(x) + list(y)):
        raise ValueError("variables must lie in (0, 1)")
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")


def moment_nested(
    k: int, x: Sequence[float], y: Sequence[float], t: float, nodes: int = 128, check_hypothesis: bool = True
) -> float:
    """Nested-circle route.

    With ``check_hypothesis`` the variables must satisfy ``max(y) < t^k``, the regime in
    which the nested formula is established; the circles themselves only need
    ``max(x) max(y) < t^(k-2)`` (see ``nested_radii``).
    """
    _check(k, x, y, t)
    if check_hypothesis and not max(y) < t**k:
        raise ContourHypothesisError(f"nested formula needs max(y) < t^k = {t**k:.4g}; got {max(y):.4g}")
    radii = nested_radii(k, x, y, t)
    rule = QuadratureRule.trapezoid(nodes)
    legs = []
    for rho in radii:
        z, dz = Contour.circle(rho).discretize(rule)
        legs.append((z, _single_factor(z, x, y, t) * dz / (2j * math.pi * z)))
    if k == 1:
        z1, f1 = legs[0]
        return float(np.sum(f1).real)
    (z1, f1), (z2, f2) = legs
    cross = (z1[:, None] - z2[None, :]) / (z1[:, None] - z2[None, :] / t)
    return float((f1 @ cross @ f2).real)


def _collapsed_factor(w: np.ndarray, part: int, x, y, t) -> np.ndarray:
    out = np.ones(w.shape, dtype=complex)
    wt = w * t
    for xi, yi in zip(x, y):
        out *= (1 - xi / wt) * (1 - yi * wt * t ** (-part)) / ((1 - xi * t**part / wt) * (1 - yi * wt))
    return out


def moment_collapsed(k: int, x: Sequence[float], y: Sequence[float], t: float, nodes: int = 128) -> float:
    _check(k, x, y, t)
    w, dw = Contour.circle(1.0 / t).discretize(QuadratureRule.trapezoid(nodes))
    meas = dw / (2j * math.pi)
    kfact = math.prod((1 - t**i) / (1 - t) for i in range(1, k + 1))
    total = 0.0 + 0.0j
    for lam in _partitions(k):
        mult = math.prod(math.factorial(m) for m in Counter(lam).values())
        pref = (1 / t - 1) ** k * kfact / mult
        f = [_collapsed_factor(w, p, x, y, t) * meas for p in lam]
        if len(lam) == 1:
            p = lam[0]
            val = np.sum(f[0] / (w * t ** (-p) - w))
        else:
            p1, p2 = lam
            a11 = 1 / (w * t ** (-p1) - w)
            a22 = 1 / (w * t ** (-p2) - w)
            a12 = 1 / (w[:, None] * t ** (-p1) - w[None, :])
            a21 = 1 / (w[None, :] * t ** (-p2) - w[:, None])
            det = a11[:, None] * a22[None, :] - a12 * a21
            val = f[0] @ det @ f[1]
        total += pref * val
    return float(total.real)


def moment_contour(
    k: int,
    x: Sequence[float],
    y: Sequence[float],
    t: float,
    method: str = "nested",
    nodes: int = 128,
    check_hypothesis: bool = True,
) -> float:
    """``E[t^{-k lam'_1}]`` for ``k`` in ``{1, 2}`` by contour quadrature (see module docstring)."""
    if method == "nested":
        return moment_nested(k, x, y, t, nodes, check_hypothesis)
    if method == "collapsed":
        return moment_collapsed(k, x, y, t, nodes)
    raise ValueError(f"unknown method {method!r}")
