"""Partitions, plane partitions and the two Hall-Littlewood weights of a plane partition.

A plane partition carries two polynomials in ``t``:

* the *border polynomial* ``A_pi(t)``, read off geometrically from the
  connected components of equal entries and the levels of their boxes;
* the *slice polynomial* ``B_pi(t)``, a product of Hall-Littlewood branching
  coefficients (at ``q = 0``) along the interlacing chain of diagonal slices.

Both are products of factors ``1 - t**i`` and are known to coincide.  Each is
returned together with its exponent multiset ``{i: multiplicity}`` so that
they can be compared exactly, without floating point in the way.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Partition:
    """A weakly decreasing sequence of positive integers (trailing zeros dropped)."""

    parts: tuple[int, ...] = ()

    def __init__(self, parts: Iterable[int] = ()) -> None:
        cleaned = tuple(int(p) for p in parts)
        while cleaned and cleaned[-1] == 0:
            cleaned = cleaned[:-1]
        for i, p in enumerate(cleaned):
            if p < 0:
                raise ValueError(f"negative part {p} in partition {cleaned}")
            if i and p > cleaned[i - 1]:
                raise ValueError(f"parts are not weakly decreasing: {cleaned}")
        if 0 in cleaned:
            raise ValueError(f"zero part followed by a positive part: {cleaned}")
        object.__setattr__(self, "parts", cleaned)

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self) -> Iterator[int]:
        return iter(self.parts)

    def __getitem__(self, i: int) -> int:
        """0-based part access; positions past the end read as 0."""
        return self.parts[i] if 0 <= i < len(self.parts) else 0

    def __repr__(self) -> str:
        return f"Partition{self.parts}"

    @property
    def length(self) -> int:
        return len(self.parts)

    @property
    def weight(self) -> int:
        return sum(self.parts)

    def multiplicity(self, j: int) -> int:
        """m_j: the number of parts equal to ``j`` (``j >= 1``)."""
        return sum(1 for p in self.parts if p == j)

    def multiplicities(self) -> dict[int, int]:
        return dict(Counter(self.parts))

    def conjugate(self) -> Partition:
        return conjugate(self)


def conjugate(lam: Partition) -> Partition:
    """Transpose of the Young diagram: ``lam'_i = #{j : lam_j >= i}``."""
    if not lam.parts:
        return Partition()
    cols = [0] * lam.parts[0]
    for p in lam.parts:
        for i in range(p):
            cols[i] += 1
    return Partition(cols)


def interlaces(lam: Partition, mu: Partition) -> bool:
    """True iff ``lam / mu`` is a horizontal strip: lam_1 >= mu_1 >= lam_2 >= mu_2 >= ..."""
    if mu.length > lam.length:
        return False
    for i in range(lam.length):
        if not lam[i] >= mu[i] >= lam[i + 1]:
            return False
    return True


def skew_phi(lam: Partition, mu: Partition, t: float) -> float:
    """Branching coefficient phi_{lam/mu}(t) of Q-functions at q = 0.

    Product of ``1 - t**m_i(lam)`` over the columns ``i`` where the strip ends,
    i.e. ``lam'_{i+1} = mu'_{i+1}`` and ``lam'_i > mu'_i``; zero unless
    ``lam`` interlaces ``mu``.
    """
    if not interlaces(lam, mu):
        return 0.0
    lc, mc = conjugate(lam), conjugate(mu)
    value = 1.0
    for i in range(1, lam[0] + 1):
        if lc[i] == mc[i] and lc[i - 1] > mc[i - 1]:
            value *= 1.0 - t ** lam.multiplicity(i)
    return value


def skew_psi(lam: Partition, mu: Partition, t: float) -> float:
    """Branching coefficient psi_{lam/mu}(t) of P-functions at q = 0.

    Product of ``1 - t**m_j(mu)`` over the columns ``j`` with
    ``lam'_{j+1} > mu'_{j+1}`` and ``lam'_j = mu'_j``; zero unless
    ``lam`` interlaces ``mu``.
    """
    if not interlaces(lam, mu):
        return 0.0
    lc, mc = conjugate(lam), conjugate(mu)
    value = 1.0
    for j in range(1, lam[0] + 1):
        if lc[j] > mc[j] and lc[j - 1] == mc[j - 1]:
            value *= 1.0 - t ** mu.multiplicity(j)
    return value


def _phi_exponents(lam: Partition, mu: Partition) -> Counter:
    lc, mc = conjugate(lam), conjugate(mu)
    out: Counter = Counter()
    for i in range(1, lam[0] + 1):
        if lc[i] == mc[i] and lc[i - 1] > mc[i - 1]:
            out[lam.multiplicity(i)] += 1
    return out


def _psi_exponents(lam: Partition, mu: Partition) -> Counter:
    lc, mc = conjugate(lam), conjugate(mu)
    out: Counter = Counter()
    for j in range(1, lam[0] + 1):
        if lc[j] > mc[j] and lc[j - 1] == mc[j - 1]:
            out[mu.multiplicity(j)] += 1
    return out


@dataclass(frozen=True)
class PlanePartition:
    """Monotone height function on a ``base_rows x base_cols`` grid (0-based storage)."""

    heights: tuple[tuple[int, ...], ...]
    base_rows: int = field(init=False)
    base_cols: int = field(init=False)

    def __init__(self, heights: Sequence[Sequence[int]]) -> None:
        grid = tuple(tuple(int(v) for v in row) for row in heights)
        if not grid or not grid[0]:
            raise ValueError("plane partition needs a non-empty base")
        width = len(grid[0])
        for row in grid:
            if len(row) != width:
                raise ValueError("ragged height grid")
        for i, row in enumerate(grid):
            for j, v in enumerate(row):
                if v < 0:
                    raise ValueError(f"negative height at ({i}, {j})")
                if j + 1 < width and row[j + 1] > v:
                    raise ValueError(f"row {i} increases at column {j}")
                if i + 1 < len(grid) and grid[i + 1][j] > v:
                    raise ValueError(f"column {j} increases at row {i}")
        object.__setattr__(self, "heights", grid)
        object.__setattr__(self, "base_rows", len(grid))
        object.__setattr__(self, "base_cols", width)

    @classmethod
    def empty(cls, rows: int, cols: int) -> PlanePartition:
        return cls([[0] * cols for _ in range(rows)])

    def __getitem__(self, ij: tuple[int, int]) -> int:
        """0-based entry access; cells off the base read as 0."""
        i, j = ij
        if 0 <= i < self.base_rows and 0 <= j < self.base_cols:
            return self.heights[i][j]
        return 0

    @property
    def volume(self) -> int:
        return sum(sum(row) for row in self.heights)

    def slice(self, k: int) -> Partition:
        """The diagonal slice lam^k = (pi_{i, i+k})_i."""
        i, j = max(0, -k), max(0, k)
        parts = []
        while i < self.base_rows and j < self.base_cols:
            parts.append(self.heights[i][j])
            i += 1
            j += 1
        return Partition(parts)


def diagonal_slices(pi: PlanePartition) -> dict[int, Partition]:
    """All diagonal slices ``{k: lam^k}`` for ``k`` in ``[-rows+1, cols-1]``."""
    return {k: pi.slice(k) for k in range(-pi.base_rows + 1, pi.base_cols)}


def from_slices(
    slices: Mapping[int, Partition | Sequence[int]],
    rows: int | None = None,
    cols: int | None = None,
) -> PlanePartition:
    """Rebuild a plane partition from its diagonal slices.

    Slices missing from the mapping are empty.  Adjacent slices must interlace
    toward ``lam^0``; anything else means the slice data is corrupt and raises.
    """
    sl = {int(k): v if isinstance(v, Partition) else Partition(v) for k, v in slices.items()}
    need_rows = max([max(0, -k) + p.length for k, p in sl.items()] + [1])
    need_cols = max([max(0, k) + p.length for k, p in sl.items()] + [1])
    rows = need_rows if rows is None else rows
    cols = need_cols if cols is None else cols
    if rows < need_rows or cols < need_cols:
        raise ValueError(f"slices do not fit in a {rows}x{cols} base")
    for k in range(-rows, cols):
        inner, outer = (k + 1, k) if k < 0 else (k, k + 1)
        a = sl.get(inner, Partition())
        b = sl.get(outer, Partition())
        if not interlaces(a, b):
            raise ValueError(f"slices {inner} and {outer} do not interlace: {a} vs {b}")
    grid = [[0] * cols for _ in range(rows)]
    for k, p in sl.items():
        i0, j0 = max(0, -k), max(0, k)
        for m, v in enumerate(p.parts):
            grid[i0 + m][j0 + m] = v
    return PlanePartition(grid)


@dataclass(frozen=True)
class ComponentBorders:
    """One connected component of equal entries and its level-wise border counts."""

    value: int
    boxes: frozenset[tuple[int, int]]
    level_counts: Mapping[int, int]  # level i -> n_i, the number of level-i border components


@dataclass(frozen=True)
class BorderDecomposition:
    components: tuple[ComponentBorders, ...]

    def exponents(self) -> dict[int, int]:
        total: Counter = Counter()
        for comp in self.components:
            total.update(comp.level_counts)
        return dict(total)


def _flood(cells: set[tuple[int, int]]) -> list[set[tuple[int, int]]]:
    """Split a set of grid cells into edge-connected pieces."""
    remaining = set(cells)
    pieces = []
    while remaining:
        seed = remaining.pop()
        piece = {seed}
        stack = [seed]
        while stack:
            i, j = stack.pop()
            for nb in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
                if nb in remaining:
                    remaining.remove(nb)
                    piece.add(nb)
                    stack.append(nb)
        pieces.append(piece)
    return pieces


def border_decomposition(pi: PlanePartition) -> BorderDecomposition:
    """Components of equal positive entries, box levels, and border components."""
    by_value: dict[int, set[tuple[int, int]]] = {}
    for i, row in enumerate(pi.heights):
        for j, v in enumerate(row):
            if v > 0:
                by_value.setdefault(v, set()).add((i, j))
    comps = []
    for value in sorted(by_value, reverse=True):
        for comp in _flood(by_value[value]):
            levels: dict[int, set[tuple[int, int]]] = {}
            for i, j in comp:
                h = 1
                while (i + h, j + h) in comp:
                    h += 1
                levels.setdefault(h, set()).add((i, j))
            counts = {h: len(_flood(cells)) for h, cells in levels.items()}
            comps.append(ComponentBorders(value, frozenset(comp), counts))
    return BorderDecomposition(tuple(comps))


def evaluate_factors(exponents: Mapping[int, int], t: float) -> float:
    """Evaluate ``prod_i (1 - t**i)**n_i``."""
    value = 1.0
    for i, n in exponents.items():
        value *= (1.0 - t**i) ** n
    return value


def border_polynomial(pi: PlanePartition, t: float) -> tuple[float, dict[int, int]]:
    """A_pi(t) and its exponent multiset ``{level: total count}``."""
    exps = border_decomposition(pi).exponents()
    return evaluate_factors(exps, t), exps


def slice_exponents(pi: PlanePartition) -> dict[int, int]:
    """Exponent multiset of B_pi: the factors of all branching coefficients along the slice chain."""
    total: Counter = Counter()
    for n in range(-pi.base_rows + 1, 1):
        total.update(_psi_exponents(pi.slice(n), pi.slice(n - 1)))
    for n in range(1, pi.base_cols + 1):
        total.update(_phi_exponents(pi.slice(n - 1), pi.slice(n)))
    return dict(total)


def slice_polynomial(pi: PlanePartition, t: float) -> float:
    """B_pi(t): psi-coefficients on the left of the main diagonal, phi on the right."""
    value = 1.0
    for n in range(-pi.base_rows + 1, 1):
        value *= skew_psi(pi.slice(n), pi.slice(n - 1), t)
    for n in range(1, pi.base_cols + 1):
        value *= skew_phi(pi.slice(n - 1), pi.slice(n), t)
    return value


def strips_added(
    mu: Partition,
    max_length: int | None = None,
    max_part: int | None = None,
    max_weight: int | None = None,
) -> Iterator[Partition]:
    """Every ``lam`` interlacing ``mu`` (``lam / mu`` a horizontal strip) within the given bounds.

    At least one of ``max_part`` / ``max_weight`` is needed to make the set finite.
    """
    if max_part is None and max_weight is None:
        raise ValueError("strips_added needs a part or weight bound")
    ell = mu.length + 1 if max_length is None else min(max_length, mu.length + 1)
    if ell < mu.length:
        return
    budget = -1 if max_weight is None else max_weight - mu.weight
    if max_weight is not None and budget < 0:
        return

    def rec(i: int, left: int, acc: list[int]) -> Iterator[Partition]:
        if i == ell:
            yield Partition(acc)
            return
        lo = mu[i]
        hi = mu[i - 1] if i > 0 else max(lo, max_part if max_part is not None else lo + left)
        if max_part is not None:
            hi = min(hi, max_part)
        if max_weight is not None:
            hi = min(hi, lo + left)
        for v in range(lo, hi + 1):
            acc.append(v)
            yield from rec(i + 1, left - (v - lo), acc)
            acc.pop()

    yield from rec(0, budget, [])


def strips_removed(lam: Partition, max_length: int | None = None) -> Iterator[Partition]:
    """Every ``mu`` with ``lam`` interlacing ``mu`` and ``len(mu) <= max_length``."""
    ell = lam.length if max_length is None else min(lam.length, max_length)
    # mu_i = 0 beyond ell, so the interlacing lam_{ell+1} >= mu_{ell+1} >= lam_{ell+2} forces lam_{ell+2} = 0
    if lam[ell + 1] > 0:
        return

    def rec(i: int, acc: list[int]) -> Iterator[Partition]:
        if i == ell:
            yield Partition(acc)
            return
        for v in range(lam[i + 1], lam[i] + 1):
            acc.append(v)
            yield from rec(i + 1, acc)
            acc.pop()

    yield from rec(0, [])
