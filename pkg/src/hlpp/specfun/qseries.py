"""q-Pochhammer products and the log-ratio series S_{a,r} with its Taylor coefficients."""

from __future__ import annotations

import cmath
import math

import numpy as np


def q_pochhammer(a: complex, t: float, tol: float = 1e-14) -> complex:
    """``(a; t)_inf = (1 - a)(1 - a t)(1 - a t^2) ...``.

    Stops once ``|a t^k| < tol (1 - |t|)``: the neglected factors then multiply
    to ``1 + O(tol)`` because ``|log prod_{j >= k} (1 - a t^j)| <= 2 |a| |t|^k / (1 - |t|)``.
    """
    if not -1.0 < t < 1.0:
        raise ValueError(f"|t| must be < 1, got {t}")
    value = complex(1.0)
    term = complex(a)
    cutoff = tol * (1.0 - abs(t))
    while abs(term) >= cutoff:
        value *= 1.0 - term
        term *= t
        if term == 0:
            break
    return value


def _s_terms(a: float, r: float, margin: float, tol: float) -> int:
    """Number of terms J with the remaining tail ``2 * a r^J / ((1 - r) margin) < tol``."""
    if a <= 0:
        return 0
    bound = 2.0 * a / ((1.0 - r) * margin)
    if bound < tol:
        return 0
    return int(math.ceil(math.log(tol / bound) / math.log(r))) + 1


def _strip_margin(z: complex, a: float) -> float:
    reach = a * math.exp(abs(z.real))
    if reach >= 1.0:
        raise ValueError(
            f"z = {z} lies outside the analyticity strip a e^|Re z| < 1 of S (a = {a})"
        )
    return 1.0 - reach


def s_ar(z: complex, a: float, r: float, tol: float = 1e-15) -> complex:
    """``S_{a,r}(z) = sum_j log(1 + a r^j e^z) - sum_j log(1 + a r^j e^-z)``, principal branch.

    Requires ``a e^{|Re z|} < 1`` so every logarithm stays on its power series.
    The neglected tail after J terms is at most ``2 a r^J / ((1 - r)(1 - a e^{|Re z|}))``.
    """
    z = complex(z)
    margin = _strip_margin(z, a)
    n_terms = _s_terms(a, r, margin, tol)
    b = a * r ** np.arange(n_terms)
    ez, emz = cmath.exp(z), cmath.exp(-z)
    return complex(np.sum(np.log1p(b * ez)) - np.sum(np.log1p(b * emz)))


def s_ar_array(z: np.ndarray, a: float, r: float, tol: float = 1e-15) -> np.ndarray:
    """Vectorized ``s_ar`` over an array of points (same strip requirement)."""
    z = np.asarray(z, dtype=complex)
    if z.size == 0:
        return z.copy()
    margin = 1.0 - a * float(np.exp(np.max(np.abs(z.real))))
    if margin <= 0:
        raise ValueError("some points lie outside the analyticity strip of S")
    n_terms = _s_terms(a, r, margin, tol)
    out = np.zeros(z.shape, dtype=complex)
    ez, emz = np.exp(z), np.exp(-z)
    # chunk over j to keep memory flat for r close to 1
    for start in range(0, n_terms, 256):
        b = a * r ** np.arange(start, min(n_terms, start + 256))
        out += np.sum(np.log1p(b * ez[..., None]) - np.log1p(b * emz[..., None]), axis=-1)
    return out


def s_ar_product(z: complex, a: float, r: float, tol: float = 1e-15) -> complex:
    """``exp(S_{a,r}(z))`` as the product ``prod_j (1 + a r^j e^z) / (1 + a r^j e^-z)``."""
    z = complex(z)
    n_terms = _s_terms(a, r, _strip_margin(z, a), tol)
    b = a * r ** np.arange(n_terms)
    return complex(np.prod((1 + b * cmath.exp(z)) / (1 + b * cmath.exp(-z))))


def s_ar_derivative(z: complex, a: float, r: float, tol: float = 1e-15) -> complex:
    """``S'(z) = sum_j a r^j (e^z / (1 + a r^j e^z) + e^-z / (1 + a r^j e^-z))``."""
    z = complex(z)
    n_terms = _s_terms(a, r, _strip_margin(z, a), tol)
    b = a * r ** np.arange(n_terms)
    ez, emz = cmath.exp(z), cmath.exp(-z)
    return complex(np.sum(b * (ez / (1 + b * ez) + emz / (1 + b * emz))))


def series_coefficient(l: int, a: float, r: float, tol: float = 1e-15) -> float:
    """Taylor coefficient ``c_{2l+1}`` of ``S_{a,r}(z) = sum_l c_{2l+1} z^{2l+1}``:

    ``c_{2l+1} = 2 / (2l+1)! * sum_k k^{2l} (-1)^{k+1} a^k / (1 - r^k)``.

    The terms decrease in modulus once ``k`` is past ``2l / (-log a)``; from there on the
    alternating tail is bounded by its first term, and summation stops when that is below
    ``tol`` relative to the running sum.
    """
    if l < 0:
        raise ValueError("l must be nonnegative")
    if not (0.0 < a < 1.0 and 0.0 < r < 1.0):
        raise ValueError("a and r must lie in (0, 1)")
    peak = 2 * l / -math.log(a)
    total = 0.0
    k = 1
    while True:
        term = k ** (2 * l) * a**k / -math.expm1(k * math.log(r))
        total += term if k % 2 else -term
        nxt = (k + 1) ** (2 * l) * a ** (k + 1) / -math.expm1((k + 1) * math.log(r))
        if k > peak and nxt <= tol * max(abs(total), 1e-300):
            break
        k += 1
    return 2.0 * total / math.factorial(2 * l + 1)


def m_shift(a: float, r: float, tol: float = 1e-15) -> float:
    """Centering constant ``M(r) = 2 sum_k a^k (-1)^{k+1} / (1 - r^k)``; the same series as ``c_1``."""
    return series_coefficient(0, a, r, tol)
