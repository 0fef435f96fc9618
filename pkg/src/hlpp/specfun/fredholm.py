"""Nystrom evaluation of Fredholm determinants.

For a kernel ``K`` on a contour (or half-line) with quadrature nodes ``z_j`` and
weights ``w_j`` (the complex measure ``dz / (2 pi i)`` on contours, Lebesgue
measure on half-lines),

    det(I + s K) ~ det(I + s W^{1/2} K W^{1/2}),    W = diag(w_j),  s = +-1,

computed by a partially pivoted LU factorization.  The same discretized
operator also yields the first terms of the Fredholm series

    det(I + s K) = 1 + sum_n s^n e_n,   e_n = (1/n!) int ... int det[K(z_i, z_j)],

as elementary symmetric functions of its eigenvalues (obtained from power
traces by Newton's identities).  Each ``e_n`` obeys Hadamard's bound
``|e_n| <= n^{n/2} B^n / n!`` with ``B = max|K| * sum|w|``; a computed term above
its bound means the discretization cannot be trusted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FredholmResult:
    value: complex
    sign: int
    nodes: int
    series_terms: tuple[complex, ...]
    hadamard_bounds: tuple[float, ...]

    @property
    def well_conditioned(self) -> bool:
        return all(abs(e) <= b * (1 + 1e-9) + 1e-300 for e, b in zip(self.series_terms, self.hadamard_bounds))

    @property
    def series_value(self) -> complex:
        """``1 + sum_{n <= order} s^n e_n`` (truncated Fredholm series)."""
        return 1 + sum(self.sign**n * e for n, e in enumerate(self.series_terms, start=1))

    def series_remainder_bound(self, cutoff: float = 1e-300) -> float:
        """Hadamard bound on ``sum_{n > order} |e_n|`` (``inf`` if the bound series diverges)."""
        if not self.hadamard_bounds:
            return math.inf
        order = len(self.hadamard_bounds)
        base = self.hadamard_bounds[0]
        return hadamard_tail(base, order, cutoff)


def hadamard_term(base: float, n: int) -> float:
    """``n^{n/2} B^n / n!`` evaluated in logs to avoid overflow."""
    if base == 0:
        return 0.0
    return math.exp(0.5 * n * math.log(n) + n * math.log(base) - math.lgamma(n + 1))


def hadamard_tail(base: float, order: int, cutoff: float = 1e-300) -> float:
    """``sum_{n > order} n^{n/2} B^n / n!``; summed until terms decay below ``cutoff`` relative to the total."""
    total = 0.0
    n = order + 1
    prev = math.inf
    while n < 10_000:
        term = hadamard_term(base, n)
        total += term
        # terms are eventually decreasing (n^{n/2}/n! decays superexponentially)
        if term < prev and term <= cutoff * max(total, 1e-300):
            return total
        prev = term
        n += 1
    return math.inf


def series_terms(a: np.ndarray, order: int) -> list[complex]:
    """``e_1 .. e_order`` of the eigenvalues of the square matrix ``a`` via Newton's identities."""
    powers = []
    m = np.array(a, dtype=complex)
    acc = m.copy()
    for _ in range(order):
        powers.append(complex(np.trace(acc)))
        acc = acc @ m
    e = [complex(1.0)]
    for n in range(1, order + 1):
        s = sum((-1) ** (i - 1) * e[n - i] * powers[i - 1] for i in range(1, n + 1))
        e.append(s / n)
    return e[1:]


def symmetrized(kmat: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``W^{1/2} K W^{1/2}`` (principal square roots; the determinant does not depend on the branch)."""
    root = np.sqrt(np.asarray(weights, dtype=complex))
    return root[:, None] * kmat * root[None, :]


def fredholm_det_matrix(
    kmat: np.ndarray, weights: np.ndarray, sign: int = 1, series_order: int = 3
) -> FredholmResult:
    """``det(I + sign * K)`` from the kernel matrix ``K[i, j] = K(z_i, z_j)`` and weights."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    kmat = np.asarray(kmat)
    n = kmat.shape[0]
    if kmat.shape != (n, n) or np.shape(weights) != (n,):
        raise ValueError("kernel matrix must be square and match the weights")
    a = symmetrized(kmat, weights)
    value = complex(np.linalg.det(np.eye(n) + sign * a)) if n else complex(1.0)
    order = min(series_order, n)
    terms = tuple(series_terms(a, order)) if order else ()
    base = float(np.max(np.abs(kmat)) * np.sum(np.abs(weights))) if n else 0.0
    bounds = tuple(hadamard_term(base, k) for k in range(1, order + 1))
    return FredholmResult(value, sign, n, terms, bounds)


def fredholm_det(spec, contour=None, rule=None, series_order: int = 3) -> FredholmResult:
    """Nystrom determinant of a kernel specification on its outer contour.

    ``spec`` must provide ``sign`` (``+1`` for ``det(I + K)``, ``-1`` for ``det(I - K)``),
    ``outer_contour()``, ``default_rule()``, ``measure(dz)`` and ``matrix(nodes)``.
    """
    contour = spec.outer_contour() if contour is None else contour
    rule = spec.default_rule() if rule is None else rule
    nodes, dz = contour.discretize(rule)
    weights = spec.measure(dz)
    kmat = spec.matrix(nodes)
    return fredholm_det_matrix(kmat, weights, spec.sign, series_order)
