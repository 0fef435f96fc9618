"""Tracy-Widom GUE distribution and the CDRP Laplace transform as Fredholm determinants."""

from __future__ import annotations

import functools

import numpy as np

from hlpp.specfun.contours import QuadratureRule
from hlpp.specfun.fredholm import FredholmResult, fredholm_det
from hlpp.specfun.kernels import AiryKernel, CDRPLimitKernel


def f_gue_result(x: float, order: int = 64, scale: float = 2.0) -> FredholmResult:
    spec = AiryKernel(float(x), nodes=order, scale=scale)
    return fredholm_det(spec, rule=QuadratureRule.gauss_legendre(order))


def f_gue(x: float, order: int = 64) -> float:
    """``F_GUE(x) = det(I - K_Ai)`` on ``L^2(x, inf)`` (Gauss-Legendre of ``order`` nodes)."""
    value = f_gue_result(x, order).value.real
    return float(min(1.0, max(0.0, value)))


def f_cdrp(x: float, T: float, order: int = 64) -> float:
    """``det(I - K_CDRP)`` on ``L^2(0, inf)``: ``E[exp(-e^x exp(F(T, 0) + T/24))]``."""
    spec = CDRPLimitKernel(float(x), float(T), nodes=order)
    value = fredholm_det(spec, rule=QuadratureRule.gauss_legendre(order)).value.real
    return float(min(1.0, max(0.0, value)))


def gue_table(xs, order: int = 64) -> np.ndarray:
    return np.array([f_gue(x, order) for x in xs])


def cdrp_table(xs, T: float, order: int = 64) -> np.ndarray:
    return np.array([f_cdrp(x, T, order) for x in xs])


@functools.lru_cache(maxsize=8)
def gue_mean(order: int = 64, lo: float = -12.0, hi: float = 8.0, panels: int = 20) -> float:
    """``E[X]`` for ``X ~ F_GUE``: ``int_0^inf (1 - F) - int_{-inf}^0 F`` by Gauss-Legendre panels.

    The neglected integrals outside ``[lo, hi]`` are below ``1e-12``: ``F`` decays like
    ``exp(-|x|^3/12)`` on the left and ``1 - F`` like ``exp(-(4/3) x^{3/2})`` on the right.
    """
    rule = QuadratureRule.gauss_legendre(16, panels)
    total = 0.0
    for a, b in ((lo, 0.0), (0.0, hi)):
        xs, ws = rule.on_interval(a, b)
        vals = np.array([f_gue_result(float(x), order).value.real for x in xs])
        total += float(np.sum(ws * (-vals if b <= 0.0 else 1.0 - vals)))
    return total
