"""Airy function on the real line, and the Airy kernel."""

from __future__ import annotations

import numpy as np
from scipy import special


def airy_ai(x):
    """``Ai(x)`` for real ``x`` (scalar or array), via ``scipy.special.airy``."""
    ai = special.airy(np.asarray(x, dtype=float))[0]
    return float(ai) if np.ndim(ai) == 0 else ai


def airy_ai_prime(x):
    """``Ai'(x)`` for real ``x``."""
    aip = special.airy(np.asarray(x, dtype=float))[1]
    return float(aip) if np.ndim(aip) == 0 else aip


def airy_kernel_matrix(eta: np.ndarray, eta_prime: np.ndarray | None = None) -> np.ndarray:
    """Airy kernel ``K_Ai(eta, eta') = (Ai(eta) Ai'(eta') - Ai'(eta) Ai(eta')) / (eta - eta')``.

    The diagonal (and near-diagonal pairs, where the divided difference loses
    digits) uses ``Ai'(eta)^2 - eta Ai(eta)^2`` corrected to first order in the gap;
    the first-order term vanishes so the error is ``O(gap^2)``.
    """
    eta = np.asarray(eta, dtype=float)
    eta_prime = eta if eta_prime is None else np.asarray(eta_prime, dtype=float)
    a, ap = special.airy(eta)[:2]
    b, bp = special.airy(eta_prime)[:2]
    gap = eta[:, None] - eta_prime[None, :]
    near = np.abs(gap) < 1e-7
    safe = np.where(near, 1.0, gap)
    k = (a[:, None] * bp[None, :] - ap[:, None] * b[None, :]) / safe
    if near.any():
        mid = 0.5 * (eta[:, None] + eta_prime[None, :])
        ai_m, aip_m = special.airy(mid)[:2]
        diag = aip_m**2 - mid * ai_m**2
        k = np.where(near, diag, k)
    return k
