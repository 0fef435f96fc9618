"""Exact, brute-force layer for the Hall-Littlewood measure on plane partitions.

Everything here is an oracle: weights ``r**|pi| * A_pi(t)``, normalizing
products, enumeration of plane partitions in a box, and exact expectations
of functions of ``lam'_1`` under the Hall-Littlewood measure on partitions
with ``P_lam(X; t) Q_lam(Y; t)`` weights.  All truncations come with an
explicit, rigorous bound on what was left out.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass
from fractions import Fraction

from hlpp.partitions import (
    Partition,
    PlanePartition,
    border_polynomial,
    skew_phi,
    skew_psi,
    strips_added,
    strips_removed,
)

ENUMERATION_LIMIT = 10**7


class OracleGuardError(ValueError):
    """An exact computation was requested at a size the oracle refuses to run."""


class TruncationError(ArithmeticError):
    """A truncated sum could not be certified to the requested tolerance."""


@dataclass(frozen=True)
class HLParams:
    """Geometric specialization x_i = y_i = a r^(i-1), i <= n_vars, with Hall-Littlewood parameter t."""

    a: float
    r: float
    t: float
    n_vars: int | None = None  # None means infinitely many variables

    def __post_init__(self) -> None:
        if not 0.0 < self.a < 1.0:
            raise ValueError(f"a must lie in (0, 1), got {self.a}")
        if not 0.0 < self.r < 1.0:
            raise ValueError(f"r must lie in (0, 1), got {self.r}")
        if not -1.0 < self.t < 1.0:
            raise ValueError(f"t must lie in (-1, 1), got {self.t}")
        if self.n_vars is not None and self.n_vars < 1:
            raise ValueError(f"n_vars must be positive, got {self.n_vars}")

    @classmethod
    def for_slice(cls, k: int, r: float, t: float, n: int | None = None) -> HLParams:
        """Parameters of the law of slice ``lam^k`` of the plane-partition measure (a = r^((1+|k|)/2)).

        On a finite ``n x n`` base only the main diagonal has equally long variable
        lists; for ``k != 0`` use :func:`slice_variables`.
        """
        if n is not None and k != 0:
            raise ValueError("off-diagonal slices of a finite base have unequal X and Y; use slice_variables")
        return cls(a=r ** ((1 + abs(k)) / 2), r=r, t=t, n_vars=n)

    def variables(self) -> list[float]:
        if self.n_vars is None:
            raise ValueError("infinite specialization has no finite variable list")
        return [self.a * self.r**i for i in range(self.n_vars)]


def slice_variables(k: int, r: float, n: int) -> tuple[list[float], list[float]]:
    """``(X, Y)`` with ``lam^k`` of the ``n x n``-base measure distributed as ``P_lam(X) Q_lam(Y)``.

    The ``n`` steps on the long side and the ``n - |k|`` on the short side pair up to
    ``x_i y_j = r^{1 + |k| + i + j}``; both lists start at ``a = r^{(1+|k|)/2}``.
    """
    if not 0 <= abs(k) < n:
        raise ValueError(f"slice {k} is outside an {n}x{n} base")
    a = r ** ((1 + abs(k)) / 2)
    return [a * r**i for i in range(n)], [a * r**j for j in range(n - abs(k))]


@dataclass(frozen=True)
class BoxSpec:
    rows: int
    cols: int
    hmax: int

    def __post_init__(self) -> None:
        if min(self.rows, self.cols, self.hmax) < 1:
            raise ValueError(f"box dimensions must be >= 1, got {self}")


def weight(pi: PlanePartition, r: float, t: float) -> float:
    """Unnormalized plane-partition weight ``r**|pi| * A_pi(t)``."""
    return r**pi.volume * border_polynomial(pi, t)[0]


def cauchy_normalizer(x: Sequence[float], y: Sequence[float], t: float) -> float:
    """``sum_lam P_lam(X;t) Q_lam(Y;t) = prod_{i,j} (1 - t x_i y_j) / (1 - x_i y_j)``."""
    log_z = 0.0
    for xi in x:
        for yj in y:
            log_z += math.log1p(-t * xi * yj) - math.log1p(-xi * yj)
    return math.exp(log_z)


def partition_function(r: float, t: float, n: int | None = None, tol: float = 1e-14) -> float:
    """Normalizing constant of the plane-partition measure.

    With ``n`` given: the ``n x n`` base product ``prod_{i,j<=n} (1 - t r^(i+j-1)) / (1 - r^(i+j-1))``.
    With ``n=None``: ``prod_m ((1 - t r^m) / (1 - r^m))**m``, truncated once the
    remaining log-sum is certified below ``tol``.
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"r must lie in (0, 1), got {r}")
    if not -1.0 < t < 1.0:
        raise ValueError(f"t must lie in (-1, 1), got {t}")
    if n is not None:
        if n < 1:
            raise ValueError("n must be positive")
        log_z = 0.0
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                q = r ** (i + j - 1)
                log_z += math.log1p(-t * q) - math.log1p(-q)
        return math.exp(log_z)
    log_z = 0.0
    m = 0
    while True:
        m += 1
        q = r**m
        log_z += m * (math.log1p(-t * q) - math.log1p(-q))
        # |log((1 - t q) / (1 - q))| <= (1 + |t|) q / (1 - q) <= (1 + |t|) q / (1 - r); sum m' r^m' over m' > m
        tail = (1 + abs(t)) / (1 - r) * r ** (m + 1) * ((m + 1) - m * r) / (1 - r) ** 2
        if tail < tol:
            return math.exp(log_z)


def box_count(rows: int, cols: int, hmax: int) -> int:
    """Number of plane partitions in a rows x cols x hmax box (MacMahon's product)."""
    total = Fraction(1)
    for i in range(1, rows + 1):
        for j in range(1, cols + 1):
            total *= Fraction(i + j + hmax - 1, i + j - 1)
    assert total.denominator == 1
    return int(total)


def enumerate_box(box: BoxSpec, limit: int = ENUMERATION_LIMIT) -> Iterator[PlanePartition]:
    """Every plane partition fitting in the box, once each, in lexicographic (row-major) order."""
    count = box_count(box.rows, box.cols, box.hmax)
    if count > limit:
        raise OracleGuardError(f"box {box} holds {count} plane partitions, above the limit {limit}")
    rows, cols = box.rows, box.cols
    grid = [[0] * cols for _ in range(rows)]
    cells = [(i, j) for i in range(rows) for j in range(cols)]

    def rec(idx: int) -> Iterator[PlanePartition]:
        if idx == len(cells):
            yield PlanePartition(grid)
            return
        i, j = cells[idx]
        cap = box.hmax
        if i > 0:
            cap = min(cap, grid[i - 1][j])
        if j > 0:
            cap = min(cap, grid[i][j - 1])
        for h in range(cap + 1):
            grid[i][j] = h
            yield from rec(idx + 1)
        grid[i][j] = 0

    yield from rec(0)


def _slice_length(k: int, rows: int, cols: int) -> int:
    return min(rows - max(0, -k), cols - max(0, k))


def box_weight_sum(box: BoxSpec, r: float, t: float) -> float:
    """``sum_{pi in box} r**|pi| B_pi(t)`` by a transfer matrix over the diagonal slices.

    This sums exactly the same finite set as ``enumerate_box`` but visits
    interlacing pairs of slices instead of whole plane partitions, which keeps
    boxes like 3 x 3 x 10 (about 1.2 million plane partitions) cheap.
    """
    rows, cols, h = box.rows, box.cols, box.hmax
    layer = {Partition(): 1.0}  # the empty slice lam^{-rows}
    for k in range(-rows + 1, cols + 1):
        length = _slice_length(k, rows, cols) if k < cols else 0
        nxt: dict[Partition, float] = {}
        for mu, w in layer.items():
            if k <= 0:
                succ = strips_added(mu, max_length=length, max_part=h)
                coeff = lambda lam, mu=mu: skew_psi(lam, mu, t)
            else:
                succ = strips_removed(mu, max_length=length)
                coeff = lambda lam, mu=mu: skew_phi(mu, lam, t)
            for lam in succ:
                c = coeff(lam)
                if c:
                    nxt[lam] = nxt.get(lam, 0.0) + w * c * r**lam.weight
        layer = nxt
    return layer.get(Partition(), 0.0)


def _log_one_minus_prod(terms: Sequence[float]) -> float:
    """``1 - prod(1 - x)`` computed without cancellation."""
    return -math.expm1(sum(math.log1p(-x) for x in terms))


def box_tail_bound(box: BoxSpec, r: float, t: float) -> float:
    """Rigorous bound on the weight of plane partitions in the base that do not fit under ``hmax``.

    Uses ``|A_pi(t)| <= (1 + |t|)**|pi|`` (at most one factor per box, each of size
    ``<= 1 + |t|``; for ``t >= 0`` simply ``A_pi <= 1``) and MacMahon's
    generating functions for the base and for the box at ``q = r (1 + max(0, -t))``.
    """
    q = r * (1.0 + max(0.0, -t))
    if q >= 1.0:
        return math.inf
    exps_box = [q ** (i + j + box.hmax - 1) for i in range(1, box.rows + 1) for j in range(1, box.cols + 1)]
    log_base = -sum(
        math.log1p(-(q ** (i + j - 1))) for i in range(1, box.rows + 1) for j in range(1, box.cols + 1)
    )
    return math.exp(log_base) * _log_one_minus_prod(exps_box)


def crude_box_tail_bound(box: BoxSpec, r: float) -> float:
    """Cruder bound ``sum_{v > hmax} C(rows*cols + v, v) r**v`` (valid for t in [0, 1))."""
    n = box.rows * box.cols
    total, v = 0.0, box.hmax + 1
    term = math.comb(n + v, v) * r**v
    while True:
        total += term
        # ratio of consecutive terms is r (n + v + 1) / (v + 1), decreasing in v
        ratio = r * (n + v + 1) / (v + 1)
        if ratio < 1 and term * ratio / (1 - ratio) < 1e-17 * total:
            return total + term * ratio / (1 - ratio)
        v += 1
        term *= ratio


@dataclass(frozen=True)
class PartitionFunctionCheck:
    product: float
    box_sum: float
    tail_bound: float
    residual: float  # part of the mismatch the tail bound does not explain


def check_partition_function(n: int, r: float, t: float, hmax: int) -> PartitionFunctionCheck:
    """Compare the box-truncated sum with the ``n x n`` product, net of the certified tail."""
    box = BoxSpec(n, n, hmax)
    z = partition_function(r, t, n)
    s = box_weight_sum(box, r, t)
    tail = box_tail_bound(box, r, t)
    gap = z - s
    residual = max(0.0, -gap, gap - tail)
    return PartitionFunctionCheck(z, s, tail, residual)


# ---------------------------------------------------------------------------
# Hall-Littlewood measure on partitions via the branching rule


def hl_weights(x: Sequence[float], y: Sequence[float], t: float, max_weight: int) -> dict[Partition, float]:
    """``P_lam(X;t) Q_lam(Y;t)`` for every ``lam`` with ``|lam| <= max_weight`` and ``len(lam) <= len(X)``.

    ``P`` and ``Q`` are built one variable at a time from single-variable skew
    functions: ``P_{lam/mu}(x) = psi_{lam/mu} x^{|lam/mu|}`` and
    ``Q_{lam/mu}(y) = phi_{lam/mu} y^{|lam/mu|}``.
    """
    p = _branch(x, t, max_weight, skew_psi)
    q = _branch(y, t, max_weight, skew_phi)
    return {lam: v * q[lam] for lam, v in p.items() if lam in q}


def _branch(
    variables: Sequence[float], t: float, max_weight: int, coeff: Callable[[Partition, Partition, float], float]
) -> dict[Partition, float]:
    layer = {Partition(): 1.0}
    for xi in variables:
        nxt: dict[Partition, float] = {}
        for mu, w in layer.items():
            for lam in strips_added(mu, max_weight=max_weight):
                c = coeff(lam, mu, t)
                if c:
                    nxt[lam] = nxt.get(lam, 0.0) + w * c * xi ** (lam.weight - mu.weight)
        layer = nxt
    return layer


@dataclass(frozen=True)
class Expectation:
    value: complex
    tail_bound: float  # certified bound on |exact - value|
    max_weight: int


def _check_lists(x: Sequence[float], y: Sequence[float]) -> None:
    if not x or not y:
        raise ValueError("X and Y must be non-empty")
    for v in (*x, *y):
        if not 0.0 < v < 1.0:
            raise ValueError(f"specialization values must lie in (0, 1), got {v}")


def hl_expectation(
    obs: Callable[[int], complex],
    x: Sequence[float],
    y: Sequence[float],
    t: float,
    tol: float = 1e-12,
    max_weight_cap: int = 200,
) -> Expectation:
    """``E[obs(lam'_1)]`` under the measure proportional to ``P_lam(X;t) Q_lam(Y;t)``.

    ``lam'_1 = len(lam) <= len(X)``, so ``obs`` is bounded on the support and the
    missing mass ``Z - sum_{|lam| <= W} P Q`` (exact, since ``Z`` is a closed
    product; ``X`` and ``Y`` may differ in length) bounds the truncation error.  ``W`` grows until that bound is below ``tol``.
    """
    _check_lists(x, y)
    if not -1.0 < t < 1.0:
        raise ValueError(f"t must lie in (-1, 1), got {t}")
    n = len(x)
    z = cauchy_normalizer(x, y, t)
    sup_obs = max(abs(obs(c)) for c in range(n + 1))
    w = 8
    while True:
        weights = hl_weights(x, y, t, w)
        total = math.fsum(weights.values())
        acc = [0.0, 0.0]
        for lam, v in weights.items():
            o = complex(obs(lam.length))
            acc[0] += v * o.real
            acc[1] += v * o.imag
        # each positive weight carries a relative rounding error of a few ulps per
        # branching step, so the sum is off by at most that fraction of Z
        missing = max(z - total, 0.0) + 8 * (n + 1) * 2.2e-16 * z
        bound = missing * sup_obs / z
        if bound < tol:
            return Expectation(complex(acc[0], acc[1]) / z, bound, w)
        if w >= max_weight_cap:
            raise TruncationError(f"tail bound {bound:.3e} above tol {tol:.1e} at weight cap {w}")
        w = min(max_weight_cap, int(w * 1.5) + 1)


def moment_observable(k: int, t: float) -> Callable[[int], float]:
    """``c -> t**(-k c)``."""
    if not 0.0 < t < 1.0:
        raise ValueError("moments t^(-k lam'_1) need t in (0, 1)")
    return lambda c: t ** (-k * c)


def t_laplace_observable(u: complex, t: float, tol: float = 1e-16) -> Callable[[int], complex]:
    """``c -> 1 / ((1 - t) u t^(-c); t)_inf``."""
    from hlpp.specfun.qseries import q_pochhammer

    if not 0.0 < t < 1.0:
        raise ValueError("the t-Laplace transform needs t in (0, 1)")
    u = complex(u)
    if u.imag == 0.0 and u.real > 0.0:
        raise ValueError("u on the positive real axis hits the poles of 1/(.;t)_inf")
    return lambda c: 1.0 / q_pochhammer((1.0 - t) * u * t ** (-c), t, tol)


def exact_expectation(
    params: HLParams,
    observable: str,
    value: complex,
    tol: float = 1e-12,
) -> Expectation:
    """Exact ``E[t^(-k lam'_1)]`` (``observable="moment"``, ``value=k``) or
    ``E[1/((1-t) u t^(-lam'_1); t)_inf]`` (``observable="t_laplace"``, ``value=u``)
    for the finite geometric specialization carried by ``params``."""
    x = params.variables()
    if observable == "moment":
        obs = moment_observable(int(value), params.t)
    elif observable == "t_laplace":
        obs = t_laplace_observable(value, params.t)
    else:
        raise ValueError(f"unknown observable {observable!r}")
    return hl_expectation(obs, x, x, params.t, tol)


def slice_length_law_by_enumeration(n: int, r: float, t: float, hmax: int, k: int = 0) -> dict[int, float]:
    """Law of ``len(lam^k)`` under the box-truncated plane-partition measure on an ``n x n`` base.

    An independent route to the slice marginal: brute force over plane partitions
    rather than the branching rule.  Normalized by the truncated sum.
    """
    law: dict[int, float] = {}
    for pi in enumerate_box(BoxSpec(n, n, hmax)):
        ell = pi.slice(k).length
        law[ell] = law.get(ell, 0.0) + weight(pi, r, t)
    total = math.fsum(law.values())
    return {ell: v / total for ell, v in sorted(law.items())}
