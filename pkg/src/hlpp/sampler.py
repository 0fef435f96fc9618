"""Glauber dynamics for the Hall-Littlewood measure on plane partitions in an n x n x n box.

One iteration picks a uniform site of the box; if it is an addable or removable
cube the chain moves to the added/removed state with its conditional probability
under ``r**|pi| A_pi(t)``, otherwise nothing happens.  Runs of empty iterations
are replaced by a single geometric draw, after which the proposed cube is
uniform over ``Add u Rem``.

The hot loop lives in :mod:`hlpp._glauber` (numba).  This module holds the state
object, a pure-Python reference implementation of a single step (used to
cross-check the compiled loop), run orchestration and checkpoint I/O.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from hlpp import _glauber
from hlpp.partitions import PlanePartition
from hlpp.rng import RngStream

CHECKPOINT_VERSION = 1
Cube = tuple[int, int, int]


def local_weight_G(m_nu: int, m_lam: int, t: float) -> float:
    """``1 - t**m_nu`` when ``m_nu > m_lam``, else 1; a negative argument (the c = 0 sentinel) gives 1.

    ``m_nu`` is the multiplicity in the earlier slice, ``m_lam`` in the later one.
    """
    if m_nu < 0 or m_lam < 0:
        return 1.0
    if m_nu > m_lam:
        return 1.0 - t**m_nu
    return 1.0


class SamplerState:
    """Height grid plus the incrementally maintained move sets and diagonal multiplicities."""

    def __init__(self, n: int, r: float, t: float, heights: np.ndarray | Sequence[Sequence[int]] | None = None):
        if n < 1:
            raise ValueError("box side must be >= 1")
        if not 0.0 < r < 1.0:
            raise ValueError(f"r must lie in (0, 1), got {r}")
        if not -1.0 < t < 1.0:
            raise ValueError(f"t must lie in (-1, 1), got {t}")
        self.n, self.r, self.t = int(n), float(r), float(t)
        grid = np.zeros((n, n), dtype=np.int32) if heights is None else np.asarray(heights, dtype=np.int32)
        if grid.shape != (n, n):
            raise ValueError(f"heights must be {n}x{n}, got {grid.shape}")
        if grid.min() < 0 or grid.max() > n:
            raise ValueError("heights must lie in [0, n]")
        PlanePartition(grid.tolist())  # monotonicity check
        self.iter = 0  # unbounded Python integer
        self.proposals = 0
        self.tpow = np.array([self.t**m for m in range(n + 2)], dtype=np.float64)
        self._rebuild(grid)

    def _rebuild(self, grid: np.ndarray) -> None:
        n = self.n
        h = np.zeros((n + 2, n + 2), dtype=np.int32)
        h[0, :] = n + 1
        h[:, 0] = n + 1
        h[1 : n + 1, 1 : n + 1] = grid
        self.h = h
        size = (n + 2) ** 2
        self.add_list = np.zeros(n * n, dtype=np.int32)
        self.rem_list = np.zeros(n * n, dtype=np.int32)
        self.add_pos = np.full(size, -1, dtype=np.int32)
        self.rem_pos = np.full(size, -1, dtype=np.int32)
        self.counts = np.array([0, 0, int(grid.sum()), -1], dtype=np.int64)
        self.mult = np.zeros((2 * n + 1, n + 2), dtype=np.int32)
        for x in range(1, n + 1):
            for y in range(1, n + 1):
                c = h[x, y]
                if c > 0:
                    self.mult[x - y + n, c] += 1
                _glauber.refresh_column(
                    h, n, x, y, self.add_list, self.add_pos, self.rem_list, self.rem_pos, self.counts
                )

    # -- construction -------------------------------------------------------

    @classmethod
    def empty(cls, n: int, r: float, t: float) -> SamplerState:
        return cls(n, r, t)

    @classmethod
    def full(cls, n: int, r: float, t: float) -> SamplerState:
        return cls(n, r, t, np.full((n, n), n, dtype=np.int32))

    def copy(self) -> SamplerState:
        other = SamplerState(self.n, self.r, self.t, self.heights)
        for name in ("add_list", "rem_list", "add_pos", "rem_pos", "counts"):
            setattr(other, name, getattr(self, name).copy())
        other.iter = self.iter
        other.proposals = self.proposals
        return other

    # -- views ----------------------------------------------------------------

    @property
    def heights(self) -> np.ndarray:
        return self.h[1 : self.n + 1, 1 : self.n + 1].copy()

    @property
    def volume(self) -> int:
        return int(self.counts[_glauber.VOLUME])

    @property
    def skip_left(self) -> int:
        return int(self.counts[_glauber.SKIP])

    def plane_partition(self) -> PlanePartition:
        return PlanePartition(self.heights.tolist())

    def _cols(self, lst: np.ndarray, count: int) -> list[tuple[int, int]]:
        w = self.n + 2
        return [(int(c) // w, int(c) % w) for c in lst[:count]]

    def addable(self) -> set[Cube]:
        return {(x, y, int(self.h[x, y]) + 1) for x, y in self._cols(self.add_list, self.counts[0])}

    def removable(self) -> set[Cube]:
        return {(x, y, int(self.h[x, y])) for x, y in self._cols(self.rem_list, self.counts[1])}

    def addable_list(self) -> list[Cube]:
        """Addable cubes in index order (the order the uniform pick uses)."""
        return [(x, y, int(self.h[x, y]) + 1) for x, y in self._cols(self.add_list, self.counts[0])]

    def removable_list(self) -> list[Cube]:
        return [(x, y, int(self.h[x, y])) for x, y in self._cols(self.rem_list, self.counts[1])]

    def get_mult(self, k: int, c: int) -> int:
        """``m_c`` of the slice ``k = x - y``; ``-2`` for ``c = 0``; 0 off the box."""
        if c == 0:
            return -2
        if abs(k) >= self.n or c > self.n:
            return 0
        return int(self.mult[k + self.n, c])

    @property
    def diag_mult(self) -> dict[tuple[int, int], int]:
        """Nonzero multiplicities as ``{(k, c): m_c(lam^k)}``."""
        ks, cs = np.nonzero(self.mult)
        return {(int(k) - self.n, int(c)): int(self.mult[k, c]) for k, c in zip(ks, cs)}

    def slice_lengths(self, ks: Iterable[int]) -> list[int]:
        arr = np.asarray(list(ks), dtype=np.int64)
        return [int(v) for v in _glauber.slice_lengths(self.mult, self.n, arr)]

    # -- invariants -----------------------------------------------------------

    def audit(self) -> list[str]:
        """Compare every incremental structure with a from-scratch recomputation."""
        problems = []
        try:
            fresh = SamplerState(self.n, self.r, self.t, self.heights)
        except ValueError as exc:
            return [f"height grid invalid: {exc}"]
        if self.addable() != fresh.addable():
            problems.append("addable set differs from recomputation")
        if self.removable() != fresh.removable():
            problems.append("removable set differs from recomputation")
        if not np.array_equal(self.mult, fresh.mult):
            problems.append("diagonal multiplicities differ from recomputation")
        if self.volume != fresh.volume:
            problems.append("volume differs from recomputation")
        for lst, pos, cnt in ((self.add_list, self.add_pos, 0), (self.rem_list, self.rem_pos, 1)):
            for i, c in enumerate(lst[: self.counts[cnt]]):
                if pos[c] != i:
                    problems.append(f"position map broken at index {i}")
        if self.addable() & self.removable():
            problems.append("a cube is both addable and removable")
        return problems


def flip_probability(state: SamplerState, cube: Cube) -> float:
    """Conditional probability that the cube is present, given the rest of the state.

    Equals ``w(pi_with) / (w(pi_with) + w(pi_without))`` for ``w = r**|pi| A_pi(t)``.
    Only slice ``k = x - y`` changes, and only in its multiplicities at ``z - 1`` and
    ``z``; the weight ratio therefore reduces to the ``G``-factors linking slice ``k``
    to slices ``k - 1`` and ``k + 1`` at those two values.
    """
    x, y, z = cube
    h = int(state.h[x, y])
    if h == z - 1 and cube in state.addable():
        mult_present_shift = (1, -1)
    elif h == z and cube in state.removable():
        mult_present_shift = (0, 0)
    else:
        raise ValueError(f"cube {cube} is neither addable nor removable")
    t, gm = state.t, state.get_mult
    k = x - y
    a0, a1 = gm(k - 1, z), gm(k - 1, z - 1)
    b0, b1 = gm(k, z), gm(k, z - 1)
    c0, c1 = gm(k + 1, z), gm(k + 1, z - 1)
    # multiplicities of slice k at (z, z-1) with the cube present / absent
    p0, p1 = b0 + mult_present_shift[0], b1 + mult_present_shift[1]
    q0, q1 = p0 - 1, p1 + 1
    g = local_weight_G
    w_present = state.r * g(a0, p0, t) * g(a1, p1, t) * g(p0, c0, t) * g(p1, c1, t)
    w_absent = g(a0, q0, t) * g(a1, q1, t) * g(q0, c0, t) * g(q1, c1, t)
    return w_present / (w_present + w_absent)


def geometric_skip(x_pi: float, rng: RngStream) -> int:
    """Number of empty iterations before the next proposal: Geom with ``P(k) = x_pi^k (1 - x_pi)``."""
    if not 0.0 <= x_pi < 1.0:
        raise ValueError(f"x_pi must lie in [0, 1), got {x_pi}")
    return _glauber.geometric_skip(x_pi, rng.uniform())


def step(state: SamplerState, rng: RngStream, budget: int | None = None) -> SamplerState:
    """One proposal cycle, in plain Python (reference for the compiled loop).

    Draws the geometric skip (unless one is pending), advances ``iter`` past the
    empty iterations, then proposes a uniform cube from ``Add u Rem`` and accepts
    with the conditional probability.  If ``budget`` (a total iteration count) is
    reached during the skip, ``iter`` stops at ``budget`` and no move is made.
    """
    n3 = state.n**3
    tot = int(state.counts[0] + state.counts[1])
    if state.counts[_glauber.SKIP] < 0:
        state.counts[_glauber.SKIP] = geometric_skip(1.0 - tot / n3, rng)
    skip = int(state.counts[_glauber.SKIP])
    if budget is not None and state.iter + skip >= budget:
        state.counts[_glauber.SKIP] = skip - (budget - state.iter)
        state.iter = budget
        return state
    state.iter += skip
    state.counts[_glauber.SKIP] = -1
    idx = int(rng.uniform() * tot)
    n_add = int(state.counts[0])
    if idx < n_add:
        cube = state.addable_list()[idx]
        adding = True
    else:
        cube = state.removable_list()[idx - n_add]
        adding = False
    p = flip_probability(state, cube)
    accept_prob = p if adding else 1.0 - p
    if rng.uniform() < accept_prob:
        _glauber.apply_move(
            state.h, state.mult, state.n, cube[0], cube[1], adding,
            state.add_list, state.add_pos, state.rem_list, state.rem_pos, state.counts,
        )  # fmt: skip
    state.iter += 1
    state.proposals += 1
    return state


_NO_RECORD_I = np.zeros(0, dtype=np.int64)
_NO_RECORD_F = np.zeros(0, dtype=np.float64)


def advance(
    state: SamplerState,
    rng: RngStream,
    iterations: int | None = None,
    proposals: int | None = None,
    record: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[int, int]:
    """Run the compiled loop for up to ``iterations`` iterations and/or ``proposals`` proposals."""
    if iterations is None and proposals is None:
        raise ValueError("give an iteration or a proposal budget")
    big = np.iinfo(np.int64).max // 4
    codes, weights = record if record is not None else (_NO_RECORD_I, _NO_RECORD_F)
    used_total, moves_total = 0, 0
    it_left = iterations
    mv_left = proposals
    while True:
        it_chunk = big if it_left is None else min(it_left, big)
        mv_chunk = big if mv_left is None else mv_left
        if record is not None:
            mv_chunk = min(mv_chunk, codes.shape[0] - moves_total)
        used, moves = _glauber.run_block(
            state.h, state.mult, state.n, state.r, state.tpow,
            state.add_list, state.add_pos, state.rem_list, state.rem_pos, state.counts,
            rng.generator, it_chunk, mv_chunk,
            codes[moves_total:], weights[moves_total:],
        )  # fmt: skip
        used_total += used
        moves_total += moves
        state.iter += used
        state.proposals += moves
        if it_left is not None:
            it_left -= used
        if mv_left is not None:
            mv_left -= moves
        if (it_left is not None and it_left <= 0) or (mv_left is not None and mv_left <= 0):
            return used_total, moves_total
        if record is not None and moves_total >= codes.shape[0]:
            return used_total, moves_total


def transition_matrix(n: int, r: float, t: float) -> tuple[list[PlanePartition], np.ndarray]:
    """Exact one-iteration transition matrix of the chain on every plane partition in the ``n``-box.

    Each iteration picks one of the ``n^3`` sites; an addable cube is added with the
    conditional probability ``p``, a removable one removed with ``1 - p``; everything
    else is a self-loop.  Rows are indexed like the returned list of states.
    """
    from hlpp.measure import BoxSpec, enumerate_box

    states = list(enumerate_box(BoxSpec(n, n, n)))
    index = {pi.heights: i for i, pi in enumerate(states)}
    n3 = n**3
    mat = np.zeros((len(states), len(states)))
    for i, pi in enumerate(states):
        st = SamplerState(n, r, t, pi.heights)
        for cube in st.addable_list():
            x, y, _ = cube
            nxt = [list(row) for row in pi.heights]
            nxt[x - 1][y - 1] += 1
            mat[i, index[tuple(map(tuple, nxt))]] += flip_probability(st, cube) / n3
        for cube in st.removable_list():
            x, y, _ = cube
            nxt = [list(row) for row in pi.heights]
            nxt[x - 1][y - 1] -= 1
            mat[i, index[tuple(map(tuple, nxt))]] += (1.0 - flip_probability(st, cube)) / n3
        mat[i, i] += 1.0 - mat[i].sum()
    return states, mat


@dataclass
class TimeAverage:
    """Observables sampled at equally spaced iteration marks (the chain's own time)."""

    volumes: np.ndarray
    slices: np.ndarray  # (samples, len(ks))
    proposals: int


def time_average(state: SamplerState, rng: RngStream, ks: Sequence[int], proposals: int, samples: int) -> TimeAverage:
    """Advance about ``proposals`` proposals, recording volume and ``len(lam^k)`` ``samples`` times.

    Marks are spaced in iterations, not proposals: a proposal-indexed snapshot would
    sample the jump chain, whose law is tilted by the move count ``add + rem``.  The
    spacing is fixed from the current holding time ``n^3 / (add + rem)``.
    """
    if samples < 1 or proposals < samples:
        raise ValueError("need 1 <= samples <= proposals")
    moves = int(state.counts[0] + state.counts[1])
    stride = max(1, round(proposals / samples * state.n**3 / moves))
    start = state.proposals
    vols, sl = [], []
    while len(vols) < samples:
        advance(state, rng, iterations=stride)
        vols.append(state.volume)
        sl.append(state.slice_lengths(ks))
    return TimeAverage(np.array(vols, dtype=float), np.array(sl, dtype=float), state.proposals - start)


def encode_heights(grid: np.ndarray, n: int) -> int:
    """Row-major base-(n+1) code of a height grid (matches the compiled recorder)."""
    code = 0
    for v in np.asarray(grid).ravel():
        code = code * (n + 1) + int(v)
    return code


def occupation_measure(state: SamplerState, rng: RngStream, proposals: int, chunk: int = 1 << 20) -> dict[int, float]:
    """Time-weighted empirical law of the chain over ``proposals`` proposals.

    Each pre-proposal state is weighted by its expected holding time
    ``n^3 / (add + rem)`` in iterations, which turns the proposal-indexed
    sequence into an estimate of the iteration-time (stationary) law.
    """
    if (state.n + 1) ** (state.n * state.n) >= 2**63:
        raise ValueError("state codes overflow 64 bits for this box size")
    totals: dict[int, float] = {}
    left = proposals
    while left > 0:
        m = min(chunk, left)
        codes = np.zeros(m, dtype=np.int64)
        weights = np.zeros(m, dtype=np.float64)
        _, moves = advance(state, rng, proposals=m, record=(codes, weights))
        uniq, inv = np.unique(codes[:moves], return_inverse=True)
        sums = np.bincount(inv, weights=weights[:moves])
        for c, s in zip(uniq.tolist(), sums.tolist()):
            totals[c] = totals.get(c, 0.0) + s
        left -= moves
    z = math.fsum(totals.values())
    return {c: v / z for c, v in totals.items()}


# ---------------------------------------------------------------------------
# runs, observables and checkpoints


@dataclass
class ChainConfig:
    n: int
    r: float
    t: float
    total_iterations: int
    seed: int = 0
    chain: int = 0
    checkpoint_every: int | None = None
    observe_every: int | None = None
    initial: str = "empty"  # "empty" | "full" | path to a checkpoint or heights file
    unit: str = "iterations"  # what total/observe/checkpoint counts: "iterations" | "proposals"

    def __post_init__(self) -> None:
        if self.total_iterations < 0:
            raise ValueError("total_iterations must be >= 0")
        if self.unit not in ("iterations", "proposals"):
            raise ValueError(f"unit must be 'iterations' or 'proposals', got {self.unit!r}")
        for name in ("checkpoint_every", "observe_every"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class RunResult:
    state: SamplerState
    rng: RngStream
    observations: list[dict[str, Any]] = field(default_factory=list)


def initial_state(config: ChainConfig) -> SamplerState:
    if config.initial == "empty":
        return SamplerState.empty(config.n, config.r, config.t)
    if config.initial == "full":
        return SamplerState.full(config.n, config.r, config.t)
    data = json.loads(Path(config.initial).read_text())
    heights = np.asarray(data["heights"], dtype=np.int32).reshape(config.n, config.n)
    return SamplerState(config.n, config.r, config.t, heights)


def diagonals_for_taus(taus: Sequence[float], r: float) -> list[int]:
    """Diagonal index ``floor(tau N(r))`` for each tau, ``N(r) = 1/(1-r)``.

    ``1 / (1 - r)`` is rounded in binary (``1 / (1 - 0.98) = 49.99999999999996``), so
    products within a few ulps of an integer are snapped to it before flooring.
    """
    out = []
    for tau in taus:
        v = tau / (1.0 - r)
        near = round(v)
        out.append(near if abs(v - near) <= 1e-9 * max(1.0, abs(v)) else math.floor(v))
    return out


def observe(state: SamplerState, ks: Sequence[int], labels: Sequence[str]) -> dict[str, Any]:
    row: dict[str, Any] = {"iter": state.iter, "volume": state.volume}
    for label, length in zip(labels, state.slice_lengths(ks)):
        row[label] = length
    return row


def run(
    config: ChainConfig,
    state: SamplerState | None = None,
    rng: RngStream | None = None,
    observe_taus: Sequence[float] = (),
    checkpoint_path: str | os.PathLike | None = None,
    on_observation: Callable[[dict[str, Any]], None] | None = None,
) -> RunResult:
    """Run until the clock reaches ``config.total_iterations``.

    The clock is ``state.iter`` (every iteration, empty ones included) or, with
    ``config.unit == "proposals"``, ``state.proposals`` (effective steps).
    Observables (iteration, volume, ``lam'_1`` on the diagonals ``floor(tau N(r))``)
    are taken every ``observe_every`` clock ticks; checkpoints every
    ``checkpoint_every`` ticks and at the end.
    """
    state = initial_state(config) if state is None else state
    rng = RngStream(config.seed, config.chain) if rng is None else rng
    ks = diagonals_for_taus(observe_taus, config.r)
    labels = [f"lambda1_tau_{tau:g}" for tau in observe_taus]
    result = RunResult(state, rng)

    def emit() -> None:
        row = observe(state, ks, labels)
        result.observations.append(row)
        if on_observation is not None:
            on_observation(row)

    by_proposals = config.unit == "proposals"

    def clock() -> int:
        return state.proposals if by_proposals else state.iter

    marks = [m for m in (config.observe_every, config.checkpoint_every) if m]
    if config.observe_every:
        emit()
    while clock() < config.total_iterations:
        target = config.total_iterations
        for m in marks:
            target = min(target, (clock() // m + 1) * m)
        if by_proposals:
            advance(state, rng, proposals=target - clock())
        else:
            advance(state, rng, iterations=target - clock())
        if config.observe_every and clock() % config.observe_every == 0:
            emit()
        if checkpoint_path is not None and config.checkpoint_every and clock() % config.checkpoint_every == 0:
            write_checkpoint(checkpoint_path, state, rng, config.seed)
    if config.observe_every and clock() % config.observe_every != 0:
        emit()
    if checkpoint_path is not None:
        write_checkpoint(checkpoint_path, state, rng, config.seed)
    return result


def checkpoint_data(state: SamplerState, rng: RngStream, seed: int) -> dict[str, Any]:
    return {
        "version": CHECKPOINT_VERSION,
        "n": state.n,
        "r": state.r,
        "t": state.t,
        "seed": int(seed),
        "iter": str(state.iter),
        "proposals": str(state.proposals),
        "pending_skip": int(state.counts[_glauber.SKIP]),
        "rng_state": rng.get_state(),
        "heights": [int(v) for v in state.heights.ravel()],
        # list order drives the uniform pick, so it is part of the trajectory
        "addable_order": [int(c) for c in state.add_list[: state.counts[0]]],
        "removable_order": [int(c) for c in state.rem_list[: state.counts[1]]],
    }


def write_checkpoint(path: str | os.PathLike, state: SamplerState, rng: RngStream, seed: int) -> None:
    """Serialize first, then atomically replace the target; failures leave the state untouched."""
    payload = json.dumps(checkpoint_data(state, rng, seed))
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_checkpoint(path: str | os.PathLike) -> tuple[SamplerState, RngStream, dict[str, Any]]:
    data = json.loads(Path(path).read_text())
    if data.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {data.get('version')!r}")
    n = int(data["n"])
    heights = np.asarray(data["heights"], dtype=np.int32).reshape(n, n)
    state = SamplerState(n, float(data["r"]), float(data["t"]), heights)
    state.iter = int(data["iter"])
    state.proposals = int(data.get("proposals", "0"))
    state.counts[_glauber.SKIP] = int(data.get("pending_skip", -1))
    for key, lst, pos, slot in (
        ("addable_order", state.add_list, state.add_pos, 0),
        ("removable_order", state.rem_list, state.rem_pos, 1),
    ):
        order = data.get(key)
        if order is None:
            continue
        if sorted(order) != sorted(int(c) for c in lst[: state.counts[slot]]):
            raise ValueError(f"checkpoint {key} does not match its height grid")
        for i, c in enumerate(order):
            lst[i] = c
            pos[c] = i
    rng = RngStream.from_state(data["rng_state"])
    return state, rng, data
