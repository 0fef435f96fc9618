"""Compiled inner loop of the Glauber sampler.

Layout shared with ``hlpp.sampler``:

* ``h``: ``(n+2, n+2)`` int32 height grid, cells ``1..n``; row/column 0 padded with
  ``n+1`` and row/column ``n+1`` padded with 0, so the addable/removable predicates
  need no bounds checks.
* each base column holds at most one addable cube (at ``h+1``) and one removable cube
  (at ``h``), so both sets are stored as swap-remove arrays of column codes
  ``x*(n+2)+y`` with a position map (``-1`` when absent).
* ``mult[k+n, c]`` is ``m_c`` of the diagonal slice ``k = x - y``; rows ``0`` and ``2n``
  stand for the empty slices ``k = -n, n``.
* ``counts = [n_add, n_rem, volume, skip_left]``; ``skip_left = -1`` means the next
  geometric skip has not been drawn yet.  Keeping an undrawn/partially consumed skip
  in the state makes chunked runs bit-identical to uninterrupted ones.
"""

from __future__ import annotations

import math

import numba
import numpy as np

N_ADD, N_REM, VOLUME, SKIP = 0, 1, 2, 3


@numba.njit(cache=True)
def weight_g(m_nu: int, m_lam: int, tpow: np.ndarray) -> float:
    if m_nu < 0 or m_lam < 0:
        return 1.0
    if m_nu > m_lam:
        return 1.0 - tpow[m_nu]
    return 1.0


@numba.njit(cache=True)
def get_mult(mult: np.ndarray, n: int, k: int, c: int) -> int:
    if c == 0:
        return -2
    return mult[k + n, c]


@numba.njit(cache=True)
def flip_probability(mult: np.ndarray, n: int, k: int, z: int, adding: bool, r: float, tpow: np.ndarray) -> float:
    """Probability of the target state (cube added if ``adding``, removed otherwise)."""
    a0 = get_mult(mult, n, k - 1, z)
    a1 = get_mult(mult, n, k - 1, z - 1)
    b0 = get_mult(mult, n, k, z)
    b1 = get_mult(mult, n, k, z - 1)
    c0 = get_mult(mult, n, k + 1, z)
    c1 = get_mult(mult, n, k + 1, z - 1)
    if adding:
        # multiplicities of slice k with the cube present
        p0, p1 = b0 + 1, b1 - 1
        q0, q1 = b0, b1
    else:
        p0, p1 = b0, b1
        q0, q1 = b0 - 1, b1 + 1
    w_present = r * weight_g(a0, p0, tpow) * weight_g(a1, p1, tpow)
    w_absent = weight_g(a0, q0, tpow) * weight_g(a1, q1, tpow)
    if k < n:
        w_present *= weight_g(p0, c0, tpow) * weight_g(p1, c1, tpow)
        w_absent *= weight_g(q0, c0, tpow) * weight_g(q1, c1, tpow)
    if adding:
        return w_present / (w_present + w_absent)
    return w_absent / (w_present + w_absent)


@numba.njit(cache=True)
def _set_member(lst: np.ndarray, pos: np.ndarray, counts: np.ndarray, slot: int, code: int, member: bool) -> None:
    p = pos[code]
    if member:
        if p < 0:
            m = counts[slot]
            lst[m] = code
            pos[code] = m
            counts[slot] = m + 1
    elif p >= 0:
        m = counts[slot] - 1
        last = lst[m]
        lst[p] = last
        pos[last] = p
        pos[code] = -1
        counts[slot] = m


@numba.njit(cache=True)
def refresh_column(h, n, x, y, add_list, add_pos, rem_list, rem_pos, counts) -> None:
    if x < 1 or x > n or y < 1 or y > n:
        return
    v = h[x, y]
    code = x * (n + 2) + y
    addable = v < n and h[x - 1, y] > v and h[x, y - 1] > v
    removable = v >= 1 and h[x + 1, y] < v and h[x, y + 1] < v
    _set_member(add_list, add_pos, counts, N_ADD, code, addable)
    _set_member(rem_list, rem_pos, counts, N_REM, code, removable)


@numba.njit(cache=True)
def apply_move(h, mult, n, x, y, adding, add_list, add_pos, rem_list, rem_pos, counts) -> None:
    k = x - y
    if adding:
        z = h[x, y] + 1
        h[x, y] = z
        if z - 1 >= 1:
            mult[k + n, z - 1] -= 1
        mult[k + n, z] += 1
        counts[VOLUME] += 1
    else:
        z = h[x, y]
        h[x, y] = z - 1
        mult[k + n, z] -= 1
        if z - 1 >= 1:
            mult[k + n, z - 1] += 1
        counts[VOLUME] -= 1
    refresh_column(h, n, x, y, add_list, add_pos, rem_list, rem_pos, counts)
    refresh_column(h, n, x + 1, y, add_list, add_pos, rem_list, rem_pos, counts)
    refresh_column(h, n, x - 1, y, add_list, add_pos, rem_list, rem_pos, counts)
    refresh_column(h, n, x, y + 1, add_list, add_pos, rem_list, rem_pos, counts)
    refresh_column(h, n, x, y - 1, add_list, add_pos, rem_list, rem_pos, counts)


@numba.njit(cache=True)
def geometric_skip(x_pi: float, u: float) -> int:
    """``floor(log U / log x_pi)`` with ``U = 1 - u`` in (0, 1], i.e. a Geom(x_pi) draw."""
    if x_pi <= 0.0:
        return 0
    return int(math.floor(math.log1p(-u) / math.log(x_pi)))


@numba.njit(cache=True)
def run_block(
    h, mult, n, r, tpow, add_list, add_pos, rem_list, rem_pos, counts, rng, budget, max_moves, code_out, weight_out
):
    """Advance the chain by up to ``budget`` iterations or ``max_moves`` proposals.

    Returns ``(iterations_used, proposals)``.  When ``code_out`` is non-empty, the
    base-(n+1) code of the pre-proposal state and its expected holding time
    ``n^3 / (add + rem)`` are written for every proposal.

    This is ``geometric_skip`` + ``flip_probability`` + ``apply_move`` written out in
    one body: calling the helpers (with their many array arguments) from the loop
    costs several times the work of the move itself.  ``tests/test_sampler.py``
    checks it step-for-step against the Python reference ``hlpp.sampler.step``.
    """
    n3 = float(n) ** 3
    base = n + 1
    w = n + 2
    record = code_out.shape[0] > 0
    used = 0
    moves = 0
    n_add = counts[N_ADD]
    n_rem = counts[N_REM]
    skip = counts[SKIP]
    volume = counts[VOLUME]
    while used < budget and moves < max_moves:
        tot = n_add + n_rem
        if skip < 0:
            x_pi = 1.0 - tot / n3
            u0 = rng.random()
            skip = 0 if x_pi <= 0.0 else int(math.floor(math.log1p(-u0) / math.log(x_pi)))
        if skip >= budget - used:
            skip -= budget - used
            used = budget
            break
        used += skip
        skip = -1
        if record:
            code = 0
            for i in range(1, n + 1):
                for j in range(1, n + 1):
                    code = code * base + h[i, j]
            code_out[moves] = code
            weight_out[moves] = n3 / tot
        idx = int(rng.random() * tot)
        if idx < n_add:
            col = add_list[idx]
            adding = True
        else:
            col = rem_list[idx - n_add]
            adding = False
        x = col // w
        y = col % w
        k = x - y
        hz = h[x, y]
        z = hz + 1 if adding else hz
        row_a = k - 1 + n
        row_b = k + n
        row_c = k + 1 + n
        # multiplicities at (z, z-1) of slices k-1, k, k+1; -2 stands for c = 0
        a0 = mult[row_a, z]
        b0 = mult[row_b, z]
        c0 = mult[row_c, z]
        if z - 1 >= 1:
            a1 = mult[row_a, z - 1]
            b1 = mult[row_b, z - 1]
            c1 = mult[row_c, z - 1]
        else:
            a1 = -2
            b1 = -2
            c1 = -2
        if adding:
            p0, p1, q0, q1 = b0 + 1, b1 - 1, b0, b1
        else:
            p0, p1, q0, q1 = b0, b1, b0 - 1, b1 + 1
        w_present = r
        w_absent = 1.0
        if a0 >= 0 and p0 >= 0 and a0 > p0:
            w_present *= 1.0 - tpow[a0]
        if a1 >= 0 and p1 >= 0 and a1 > p1:
            w_present *= 1.0 - tpow[a1]
        if p0 >= 0 and c0 >= 0 and p0 > c0:
            w_present *= 1.0 - tpow[p0]
        if p1 >= 0 and c1 >= 0 and p1 > c1:
            w_present *= 1.0 - tpow[p1]
        if a0 >= 0 and q0 >= 0 and a0 > q0:
            w_absent *= 1.0 - tpow[a0]
        if a1 >= 0 and q1 >= 0 and a1 > q1:
            w_absent *= 1.0 - tpow[a1]
        if q0 >= 0 and c0 >= 0 and q0 > c0:
            w_absent *= 1.0 - tpow[q0]
        if q1 >= 0 and c1 >= 0 and q1 > c1:
            w_absent *= 1.0 - tpow[q1]
        if adding:
            p = w_present / (w_present + w_absent)
        else:
            p = w_absent / (w_present + w_absent)
        if rng.random() < p:
            if adding:
                h[x, y] = z
                if z - 1 >= 1:
                    mult[row_b, z - 1] -= 1
                mult[row_b, z] += 1
                volume += 1
            else:
                h[x, y] = z - 1
                mult[row_b, z] -= 1
                if z - 1 >= 1:
                    mult[row_b, z - 1] += 1
                volume -= 1
            for d in range(5):
                xx = x
                yy = y
                if d == 1:
                    xx = x + 1
                elif d == 2:
                    xx = x - 1
                elif d == 3:
                    yy = y + 1
                elif d == 4:
                    yy = y - 1
                if xx < 1 or xx > n or yy < 1 or yy > n:
                    continue
                v = h[xx, yy]
                code_c = xx * w + yy
                is_add = v < n and h[xx - 1, yy] > v and h[xx, yy - 1] > v
                is_rem = v >= 1 and h[xx + 1, yy] < v and h[xx, yy + 1] < v
                pa = add_pos[code_c]
                if is_add:
                    if pa < 0:
                        add_list[n_add] = code_c
                        add_pos[code_c] = n_add
                        n_add += 1
                elif pa >= 0:
                    n_add -= 1
                    last = add_list[n_add]
                    add_list[pa] = last
                    add_pos[last] = pa
                    add_pos[code_c] = -1
                pr = rem_pos[code_c]
                if is_rem:
                    if pr < 0:
                        rem_list[n_rem] = code_c
                        rem_pos[code_c] = n_rem
                        n_rem += 1
                elif pr >= 0:
                    n_rem -= 1
                    last = rem_list[n_rem]
                    rem_list[pr] = last
                    rem_pos[last] = pr
                    rem_pos[code_c] = -1
        used += 1
        moves += 1
    counts[N_ADD] = n_add
    counts[N_REM] = n_rem
    counts[SKIP] = skip
    counts[VOLUME] = volume
    return used, moves


@numba.njit(cache=True)
def slice_lengths(mult, n, ks):
    """``lam'_1`` (number of nonzero entries) of the diagonal slices ``ks``."""
    out = np.zeros(ks.shape[0], dtype=np.int64)
    for a in range(ks.shape[0]):
        k = ks[a]
        if -n < k < n:
            s = 0
            for c in range(1, n + 1):
                s += mult[k + n, c]
            out[a] = s
    return out
