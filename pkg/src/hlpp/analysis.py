"""Limit-shape and fluctuation post-processing for ``P_{r,t}`` as ``r -> 1``.

Scaling constants for the slice ``lam^k``, ``k = floor(tau N(r))``, ``N(r) = 1/(1-r)``:

* ``a(r) = r^{(1 + |k|)/2}`` and its limit ``a(1) = e^{-|tau|/2}``;
* ``alpha = chi = [a(1) / (1 + a(1))^2]^{-1/3} = (4 cosh^2(tau/4))^{1/3}``;
* ``M(r) = 2 sum_k (-1)^{k+1} a(r)^k / (1 - r^k)``, the exact centering of ``lam'_1``;
* ``f(tau) = 2 log(1 + e^{-|tau|/2})`` and its first two derivatives in ``|tau|``.

Fluctuation statistics:

* GUE regime (``t`` fixed): ``xi = alpha N^{-1/3} (lam'_1 - M)`` tends to ``F_GUE``;
* crossover regime (``-log t = kappa N^{-1/3}``, ``kappa = alpha (T/2)^{1/3}``):
  ``xi_hat = (-log t)(lam'_1 - M) - log(1 - t)``; the reported statistic
  ``alpha (T/2)^{1/3} N^{-1/3} (lam'_1 - M) + log(N^{1/3} alpha^{-1} (T/2)^{-1/3})``
  differs from ``xi_hat`` by ``log((1 - t)/(-log t)) -> 0``.

Volume law: ``E[(1-r)^3 |pi|] -> 2 zeta(3) - 2 Li_3(t)`` with the exact finite-``r`` value

    E|pi| = sum_k (1 - t^k) r^k (1 + r^k) / (1 - r^k)^3,
    Var|pi| = sum_k (1 - t^k) k r^k (1 + 4 r^k + r^{2k}) / (1 - r^k)^4,

from ``Z = prod_n ((1 - t r^n)/(1 - r^n))^n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special

from hlpp.sampler import diagonals_for_taus
from hlpp.specfun.qseries import m_shift, series_coefficient

# ---------------------------------------------------------------------------
# scaling frame


def a_of_r(tau: float, r: float) -> float:
    """``a(r) = r^{(1 + |floor(tau N(r))|)/2}``."""
    k = diagonals_for_taus([tau], r)[0]
    return r ** ((1 + abs(k)) / 2)


def alpha_of(a1: float) -> float:
    """``[a / (1 + a)^2]^{-1/3}``."""
    return (a1 / (1.0 + a1) ** 2) ** (-1.0 / 3.0)


@dataclass(frozen=True)
class ScalingFrame:
    r: float
    t: float
    tau: float

    def __post_init__(self) -> None:
        if not 0.0 < self.r < 1.0:
            raise ValueError("r must lie in (0, 1)")
        if not 0.0 <= self.t < 1.0:
            raise ValueError("t must lie in [0, 1)")

    @property
    def N(self) -> float:
        return 1.0 / (1.0 - self.r)

    @property
    def diagonal(self) -> int:
        """``floor(tau N(r))``."""
        return diagonals_for_taus([self.tau], self.r)[0]

    @property
    def a_r(self) -> float:
        return a_of_r(self.tau, self.r)

    @property
    def a1(self) -> float:
        return math.exp(-abs(self.tau) / 2)

    @property
    def alpha(self) -> float:
        return alpha_of(self.a1)

    @property
    def chi(self) -> float:
        """Equal to ``alpha`` once ``a(1) = e^{-|tau|/2}``: ``(4 cosh^2(tau/4))^{1/3}``."""
        return (4.0 * math.cosh(self.tau / 4) ** 2) ** (1.0 / 3.0)

    @property
    def M(self) -> float:
        return m_shift(self.a_r, self.r)

    @property
    def f(self) -> float:
        return limit_shape(self.tau)

    @property
    def f_prime(self) -> float:
        e = self.a1
        return -e / (1 + e)

    @property
    def f_second(self) -> float:
        e = self.a1
        return 0.5 * e / (1 + e) ** 2

    @property
    def extrapolated(self) -> bool:
        """``tau = 0`` lies outside the regime covered by the limit theorems."""
        return self.tau == 0.0


def limit_shape(tau: float) -> float:
    """``2 log(1 + e^{-|tau|/2})``: the limit of ``lam'_1(floor(tau N)) / N``."""
    return 2.0 * math.log1p(math.exp(-abs(tau) / 2))


def rescale_gue(lambda1, frame: ScalingFrame):
    """``alpha N^{-1/3} (lam'_1 - M(r))`` (scalar or array)."""
    scale = frame.alpha * frame.N ** (-1.0 / 3.0)
    out = scale * (np.asarray(lambda1, dtype=float) - frame.M)
    return float(out) if np.ndim(out) == 0 else out


def expected_slice_length(frame: ScalingFrame, tw_mean: float | None = None) -> float:
    """Finite-``N`` prediction ``M(r) + alpha^{-1} N^{1/3} E[TW_GUE]`` for the mean of ``lam'_1``.

    At moderate ``N`` the Tracy-Widom mean (about ``-1.771``) shifts ``lam'_1 / N`` below
    ``f(tau)`` by ``1.771 / (alpha N^{2/3})`` on top of the ``O(1/N)`` gap ``f - M/N``.
    """
    if tw_mean is None:
        from hlpp.specfun.distributions import gue_mean

        tw_mean = gue_mean()
    return frame.M + tw_mean * frame.N ** (1.0 / 3.0) / frame.alpha


def cdrp_kappa(frame: ScalingFrame, T: float) -> float:
    """``kappa = alpha (T/2)^{1/3}``."""
    if not T > 0:
        raise ValueError("T must be positive")
    return frame.alpha * (T / 2) ** (1.0 / 3.0)


def cdrp_t(r: float, tau: float, T: float) -> float:
    """The ``t`` that puts ``(r, tau)`` on the crossover scale ``-log t = kappa (1 - r)^{1/3}``."""
    kappa = cdrp_kappa(ScalingFrame(r, 0.0, tau), T)
    return math.exp(-kappa * (1 - r) ** (1.0 / 3.0))


def rescale_cdrp(lambda1, frame: ScalingFrame, T: float):
    """``alpha (T/2)^{1/3} N^{-1/3} (lam'_1 - M) + log(N^{1/3} alpha^{-1} (T/2)^{-1/3})``."""
    kappa = cdrp_kappa(frame, T)
    n13 = frame.N ** (1.0 / 3.0)
    out = kappa / n13 * (np.asarray(lambda1, dtype=float) - frame.M) + math.log(n13 / kappa)
    return float(out) if np.ndim(out) == 0 else out


def xi_hat(lambda1, frame: ScalingFrame):
    """``(-log t)(lam'_1 - M) - log(1 - t)`` at the frame's own ``t``."""
    if not frame.t > 0:
        raise ValueError("xi_hat needs t in (0, 1)")
    lt = -math.log(frame.t)
    out = lt * (np.asarray(lambda1, dtype=float) - frame.M) - math.log1p(-frame.t)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# coefficient limits of S_{a,r}


@dataclass(frozen=True)
class LadderRung:
    r: float
    c1_scaled: float  # (1 - r) c_1
    c3_scaled: float  # (1 - r) c_3
    c1_residual: float
    c3_residual: float


def coefficient_ladder(a: float, rs: Sequence[float] = (0.9, 0.99, 0.999)) -> list[LadderRung]:
    """``(1-r) c_1 -> 2 log(1 + a)`` and ``(1-r) c_3 -> a / (3 (1 + a)^2)`` along ``rs``."""
    lim1 = 2 * math.log1p(a)
    lim3 = a / (3 * (1 + a) ** 2)
    out = []
    for r in rs:
        c1 = (1 - r) * series_coefficient(0, a, r)
        c3 = (1 - r) * series_coefficient(1, a, r)
        out.append(LadderRung(r, c1, c3, abs(c1 - lim1), abs(c3 - lim3)))
    return out


# ---------------------------------------------------------------------------
# volume law


_ZETA_TAIL_TERMS = 100


def zeta3() -> float:
    """``zeta(3)`` from ``sum_{k <= K} k^-3`` plus the Euler-Maclaurin tail
    ``1/(2K^2) - 1/(2K^3) + 1/(4K^4) - 1/(12K^6)`` (error ``O(K^-8)``)."""
    k = _ZETA_TAIL_TERMS
    head = math.fsum(1.0 / j**3 for j in range(1, k + 1))
    return head + 1 / (2 * k**2) - 1 / (2 * k**3) + 1 / (4 * k**4) - 1 / (12 * k**6)


def _li3_direct(t: float, tol: float) -> float:
    terms = []
    k = 1
    p = t
    while True:
        terms.append(p / k**3)
        # remaining tail <= t^{k+1} / ((k+1)^3 (1 - t))
        if p * t / ((k + 1) ** 3 * (1 - t)) < tol:
            return math.fsum(terms)
        k += 1
        p *= t


def _li3_log_series(t: float, tol: float) -> float:
    """``Li_3(e^mu) = zeta(3) + zeta(2) mu + (3/2 - log(-mu)) mu^2/2 + sum_{k >= 3} zeta(3-k) mu^k / k!``,
    convergent for ``|mu| < 2 pi``; ``zeta(-n) = (-1)^n B_{n+1} / (n+1)``."""
    mu = math.log(t)
    total = [zeta3(), math.pi**2 / 6 * mu, (1.5 - math.log(-mu)) * mu**2 / 2]
    bern = special.bernoulli(80)
    for k in range(3, 80):
        n = k - 3
        zeta_neg = (-1) ** n * bern[n + 1] / (n + 1)
        term = zeta_neg * mu**k / math.factorial(k)
        total.append(term)
        if term == 0.0:
            continue
        if abs(term) < tol * 1e-3:
            break
    return math.fsum(total)


def li3(t: float, tol: float = 1e-14) -> float:
    """Trilogarithm on ``[0, 1]``: the power series for ``t <= 1/2``, the ``log t`` series above."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("li3 is implemented on [0, 1]")
    if t == 0.0:
        return 0.0
    if t == 1.0:
        return zeta3()
    if t <= 0.5:
        return _li3_direct(t, tol)
    return _li3_log_series(t, tol)


def volume_law(t: float) -> float:
    """``lim (1-r)^3 |pi| = 2 zeta(3) - 2 Li_3(t)``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    return 2.0 * (zeta3() - li3(t))


@dataclass(frozen=True)
class FiniteVolume:
    mean: float  # E[(1-r)^3 |pi|]
    variance: float  # Var[(1-r)^3 |pi|]
    truncation_error: float  # bound on the neglected tail of the mean


def volume_expectation(r: float, t: float, tol: float = 1e-13) -> FiniteVolume:
    """Exact ``E`` and ``Var`` of ``(1-r)^3 |pi|`` for the unrestricted measure.

    The ``k``-th term of the mean is at most ``2 r^k / (1 - r^K)^3`` for ``k >= K``, so the
    tail after ``K`` terms is at most ``2 r^{K+1} / ((1 - r)(1 - r^K)^3)``.
    """
    if not 0.0 < r < 1.0 or not 0.0 <= t < 1.0:
        raise ValueError("need r in (0, 1) and t in [0, 1)")
    scale = (1 - r) ** 3
    mean_terms, var_terms = [], []
    k = 1
    while True:
        q = r**k
        w = 1.0 - t**k
        mean_terms.append(w * q * (1 + q) / (1 - q) ** 3)
        var_terms.append(w * k * q * (1 + 4 * q + q * q) / (1 - q) ** 4)
        tail = 2 * q * r / ((1 - r) * (1 - q) ** 3) * scale
        if tail < tol:
            break
        k += 1
    return FiniteVolume(math.fsum(mean_terms) * scale, math.fsum(var_terms) * scale**2, tail)


# ---------------------------------------------------------------------------
# empirical distribution comparisons


def ks_distance(samples: Sequence[float], cdf: Callable[[float], float]) -> float:
    """``sup_x |F_n(x) - F(x)|`` for the empirical CDF ``F_n`` of ``samples``."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("ks_distance needs at least one sample")
    f = np.array([cdf(float(v)) for v in x])
    # ties: the empirical CDF jumps once per distinct value, which the two one-sided
    # differences over the sorted sample already capture
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def quantile_residuals(
    samples: Sequence[float], cdf: Callable[[float], float], levels: Sequence[float] = (0.1, 0.25, 0.5, 0.75, 0.9)
) -> list[tuple[float, float, float]]:
    """``(level, empirical quantile q, F(q) - level)`` for each level."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("quantile_residuals needs at least one sample")
    out = []
    for p in levels:
        q = float(np.quantile(x, p))
        out.append((float(p), q, float(cdf(q)) - float(p)))
    return out
