"""Kernel specifications for the Fredholm determinants of the slice-length law.

Each spec knows its outer contour, the measure its nodes carry, the sign of the
determinant (``det(I + K)`` or ``det(I - K)``) and how to assemble the kernel on
node sets:

* ``FiniteNKernel``: the Mellin-Barnes kernel ``K^N_u`` on the circle ``|w| = 1/t``
  for finite variable lists ``X``, ``Y``; ``det(I + K^N_u)`` is the t-Laplace
  transform ``E[1 / ((1 - t) u t^{-lam'_1}; t)_inf]``.
* ``GUERescaledKernel``: ``K~_zeta`` on the left-opening wedge, for the specialization
  ``x = y = (a, a r, a r^2, ...)``; ``det(I - K~_zeta)`` is the same transform with
  ``zeta = (1/t - 1) u``.
* ``CDRPRescaledKernel``: ``K^_zeta`` on the vertical segment ``Re W = -1/4``, same
  specialization and the same transform.
* ``AiryKernel``: ``K_Ai`` on ``L^2(x, inf)``; ``det(I - K_Ai) = F_GUE(x)``.
* ``CDRPLimitKernel``: ``K_CDRP`` on ``L^2(0, inf)``; ``det(I - K_CDRP)`` is the Laplace
  transform of ``exp(F(T, 0) + T/24)`` at ``e^x``.

Powers ``(-zeta)^s`` use the principal branch ``exp(s (log|zeta| + i arg(-zeta)))``,
``arg`` in ``(-pi, pi)``; ``zeta`` (or ``u``) on the positive real axis is rejected.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from hlpp.measure import TruncationError
from hlpp.specfun.airy import airy_kernel_matrix
from hlpp.specfun.contours import Contour, QuadratureRule
from hlpp.specfun.qseries import s_ar_array

__all__ = [
    "FiniteNKernel",
    "GUERescaledKernel",
    "CDRPRescaledKernel",
    "AiryKernel",
    "CDRPLimitKernel",
    "kernel_eval",
    "power_over_sine",
    "default_truncation",
    "image_terms",
]

_CHUNK = 1 << 20  # complex entries per broadcast block


def _log_minus(zeta: complex) -> complex:
    """Principal ``log(-zeta)``; rejects ``zeta`` in ``[0, inf)``."""
    zeta = complex(zeta)
    if zeta.imag == 0 and zeta.real >= 0:
        raise ValueError(f"zeta = {zeta} lies on the nonnegative real axis")
    return cmath.log(-zeta)


def default_truncation(theta: float) -> float:
    """``Y = 40 / (pi - |theta|)``: the line integrand then decays below ``e^{-40}``."""
    return 40.0 / (math.pi - abs(theta))


def image_terms(theta: float, period: float, tol: float) -> int:
    """``|k| <= 1 + ceil((-log tol) / (period (pi - |theta|)))`` for the periodized sine sums.

    ``period`` is the shift of ``s`` between images (``2 pi / (-log t)``); image ``k``
    is of size ``exp(|k| period (|theta| - pi))``.
    """
    return 1 + math.ceil(-math.log(tol) / (period * (math.pi - abs(theta))))


def power_over_sine(s: np.ndarray, log_mz: complex) -> np.ndarray:
    """``exp(s log(-zeta)) * pi / sin(-pi s)`` = ``Gamma(-s) Gamma(1 + s) (-zeta)^s``.

    Written with decaying exponentials only, so it neither overflows nor cancels for
    large ``|Im s|``.
    """
    s = np.asarray(s, dtype=complex)
    upper = s.imag >= 0
    # Im s >= 0: 1/sin(pi s) = 2i e^{i pi s} / (e^{2 i pi s} - 1)
    # Im s <  0: 1/sin(pi s) = -2i e^{-i pi s} / (e^{-2 i pi s} - 1)
    sgn = np.where(upper, 1.0, -1.0)
    e1 = np.exp(s * log_mz + sgn * 1j * np.pi * s)
    e2 = np.exp(sgn * 2j * np.pi * s)
    inv_sin_times_power = sgn * 2j * e1 / (e2 - 1.0)
    return -np.pi * inv_sin_times_power


def kernel_eval(spec, w: complex, w_prime: complex) -> complex:
    """``K(w, w')`` for any kernel spec."""
    return complex(spec.block(np.array([w]), np.array([w_prime]))[0, 0])


class _KernelBase:
    sign = -1

    def matrix(self, nodes: np.ndarray) -> np.ndarray:
        return self.block(nodes, nodes)

    def measure(self, dz: np.ndarray) -> np.ndarray:
        return dz / (2j * math.pi)


@dataclass(frozen=True)
class FiniteNKernel(_KernelBase):
    """``K^N_u(w, w') = int_{Re s = 1/2} ds/(2 pi i) Gamma(-s) Gamma(1+s) (-zeta)^s g_{w,w'}(t^s)``

    with ``zeta = u (1/t - 1)`` and

        g_{w,w'}(t^s) = 1/(w t^{-s} - w') prod_j (1 - x_j/(w t)) (1 - y_j w t t^{-s})
                                            / ((1 - x_j t^s/(w t)) (1 - y_j w t)).

    The line is cut at ``|Im s| <= y_max`` (default ``40 / (pi - |arg(-zeta)|)``) and
    integrated with Gauss-Legendre panels of width ``panel_width``.
    """

    x: tuple[float, ...]
    y: tuple[float, ...]
    t: float
    u: complex
    y_max: float | None = None
    s_nodes: int = 16
    panel_width: float = 1.0
    outer_nodes: int = 128
    tol: float = 1e-10

    sign = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        if len(self.x) != len(self.y) or not self.x:
            raise ValueError("X and Y must be nonempty and of equal length")
        if not all(0 < v < 1 for v in self.x + self.y):
            raise ValueError("variables must lie in (0, 1)")
        if not 0 < self.t < 1:
            raise ValueError("t must lie in (0, 1)")
        u = complex(self.u)
        if u.imag == 0 and u.real > 0:
            raise ValueError("u must not lie on the positive real axis")

    @property
    def zeta(self) -> complex:
        return complex(self.u) * (1.0 / self.t - 1.0)

    @property
    def theta(self) -> float:
        return 0.0 if self.zeta == 0 else _log_minus(self.zeta).imag

    @property
    def truncation(self) -> float:
        return default_truncation(self.theta) if self.y_max is None else float(self.y_max)

    def outer_contour(self) -> Contour:
        return Contour.circle(1.0 / self.t)

    def default_rule(self) -> QuadratureRule:
        return QuadratureRule.trapezoid(self.outer_nodes)

    def g_bound(self) -> float:
        """Explicit bound ``M`` on ``|g_{w,w'}(t^s)|`` for ``|w| = |w'| = 1/t`` and ``Re s = 1/2``."""
        t, h = self.t, math.sqrt(self.t)
        m = t / (1.0 / h - 1.0)
        for xj, yj in zip(self.x, self.y):
            m *= (1 + xj) * (1 + yj / h) / ((1 - xj * h) * (1 - yj))
        return m

    def tail_bound(self) -> float:
        """Bound on the neglected ``|Im s| > y_max`` part of the line integral."""
        if self.zeta == 0:
            return 0.0
        gap = math.pi - abs(self.theta)
        return 2 * math.sqrt(abs(self.zeta)) * self.g_bound() * math.exp(-gap * self.truncation) / gap

    def line_rule(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes ``s_q`` on ``Re s = 1/2`` and weights including ``Gamma(-s) Gamma(1+s) (-zeta)^s / (2 pi)``."""
        ymax = self.truncation
        panels = max(1, math.ceil(ymax / self.panel_width))
        yq, wq = QuadratureRule.gauss_legendre(self.s_nodes, panels).on_interval(-ymax, ymax, (0.0,))
        s = 0.5 + 1j * yq
        coef = power_over_sine(s, _log_minus(self.zeta)) * wq / (2 * math.pi)
        return s, coef

    def g(self, w, w_prime, s) -> np.ndarray:
        """``g_{w,w'}(t^s)`` (broadcasting over its arguments)."""
        w = np.asarray(w, dtype=complex)
        ts = np.exp(np.asarray(s, dtype=complex) * math.log(self.t))
        out = 1.0 / (w / ts - np.asarray(w_prime, dtype=complex))
        wt = w * self.t
        for xj, yj in zip(self.x, self.y):
            out = out * (1 - xj / wt) * (1 - yj * wt / ts) / ((1 - xj * ts / wt) * (1 - yj * wt))
        return out

    def block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=complex)
        cols = np.asarray(cols, dtype=complex)
        out = np.zeros((rows.size, cols.size), dtype=complex)
        if self.zeta == 0:
            return out
        tail = self.tail_bound()
        if tail > self.tol:
            raise TruncationError(f"line-integral tail bound {tail:.2e} exceeds tol {self.tol:.1e}")
        s, coef = self.line_rule()
        ts = np.exp(s * math.log(self.t))
        wt = rows[:, None] * self.t
        f = np.ones((rows.size, s.size), dtype=complex)
        for xj, yj in zip(self.x, self.y):
            f *= (1 - xj / wt) * (1 - yj * wt / ts) / ((1 - xj * ts / wt) * (1 - yj * wt))
        f *= coef
        shifted = rows[:, None] / ts  # w t^{-s}
        step = max(1, _CHUNK // max(1, rows.size * cols.size))
        for q0 in range(0, s.size, step):
            sl = slice(q0, q0 + step)
            den = shifted[:, sl, None] - cols[None, None, :]
            out += np.einsum("aq,aqb->ab", f[:, sl], 1.0 / den)
        return out


def _check_zeta(zeta: complex) -> tuple[complex, float]:
    log_mz = _log_minus(zeta)
    return log_mz, log_mz.imag


def _image_sum(diff: np.ndarray, log_mz: complex, period: float, kmax: int) -> np.ndarray:
    """``sum_{|k| <= kmax} Gamma(-s_k) Gamma(1+s_k) (-zeta)^{s_k}``, ``s_k = diff + i k period``."""
    total = np.zeros(diff.shape, dtype=complex)
    for k in range(-kmax, kmax + 1):
        total += power_over_sine(diff + 1j * k * period, log_mz)
    return total


def _image_tail(log_mz: complex, period: float, kmax: int, s_re_max: float, s_im_max: float) -> float:
    """Bound on the images ``|k| > kmax`` of ``|pi (-zeta)^s / sin(pi s)|``.

    For ``|Im s| = v >= 1``: ``|pi / sin(pi s)| <= 2 pi e^{-pi v} / (1 - e^{-2 pi})`` and
    ``|(-zeta)^s| <= |zeta|^{Re s} e^{|theta| v}``.
    """
    theta = abs(log_mz.imag)
    gap = math.pi - theta
    scale = math.exp(max(s_re_max * log_mz.real, -s_re_max * log_mz.real)) * 2 * math.pi / (1 - math.exp(-2 * math.pi))
    v0 = (kmax + 1) * period - s_im_max
    if v0 < 1:
        return math.inf
    return 2 * scale * math.exp(-gap * v0) / (1 - math.exp(-gap * period))


@dataclass(frozen=True)
class GUERescaledKernel(_KernelBase):
    """``K~_zeta(W, W') = e^W/(2 pi i) int_{gamma_Z} dZ (-zeta)^{f} G_{zeta,t}(W, Z)
    exp(S(Z) - S(W)) / (e^{W'} - e^Z)``, ``f = (Z - W)/(-log t)``.

    ``G_{zeta,t}`` periodizes ``pi/(-log t) / sin(-pi f)`` over ``Z -> Z + 2 pi i k``.
    Both wedges ``W = -offset - A|y| + i y`` and ``Z = offset + A|y| + i y``,
    ``|y| <= pi``, are moved off the common apex by ``offset`` so the kernel stays
    bounded; the runtime check requires the sine pole ``Z = W - log t`` and the
    singularities of ``S`` to stay outside the strip they enclose.
    """

    a: float
    r: float
    t: float
    zeta: complex
    A: float = 0.05
    offset: float | None = None
    nodes: int = 24
    panels: int = 6
    inner_nodes: int = 24
    inner_panels: int = 8
    tol: float = 1e-12

    def __post_init__(self) -> None:
        if not (0 < self.a < 1 and 0 < self.r < 1 and 0 < self.t < 1):
            raise ValueError("a, r, t must lie in (0, 1)")
        _check_zeta(self.zeta)
        reach = self.A * math.pi + self.shift
        if not 2 * reach < -math.log(self.t):
            raise ValueError("wedges too wide: the sine pole Z = W - log t lies between them")
        if not reach < -math.log(self.a):
            raise ValueError("wedges leave the analyticity strip of S_{a,r}")

    @property
    def shift(self) -> float:
        if self.offset is not None:
            return float(self.offset)
        # half of the room left by the wedge opening on either constraint
        room = min(-math.log(self.t) / 2, -math.log(self.a)) - self.A * math.pi
        return 0.5 * room

    def outer_contour(self) -> Contour:
        return Contour.wedge(-self.A, apex=-self.shift)

    def inner_contour(self) -> Contour:
        return Contour.wedge(self.A, apex=self.shift)

    def default_rule(self) -> QuadratureRule:
        return QuadratureRule.gauss_legendre(self.nodes, self.panels)

    def block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=complex)
        cols = np.asarray(cols, dtype=complex)
        log_mz, theta = _check_zeta(self.zeta)
        lt = -math.log(self.t)
        period = 2 * math.pi / lt
        z, dz = self.inner_contour().discretize(QuadratureRule.gauss_legendre(self.inner_nodes, self.inner_panels))
        kmax = image_terms(theta, period, self.tol)
        smax = (2 * (self.A * math.pi + self.shift)) / lt
        while _image_tail(log_mz, period, kmax, smax, 2 * math.pi / lt) > self.tol:
            kmax += 1
        diff = (z[None, :] - rows[:, None]) / lt
        g = _image_sum(diff, log_mz, period, kmax) / lt
        s_z = s_ar_array(z, self.a, self.r)
        s_w = s_ar_array(rows, self.a, self.r)
        h = np.exp(rows)[:, None] / (2j * math.pi) * dz[None, :] * g * np.exp(s_z[None, :] - s_w[:, None])
        c = 1.0 / (np.exp(cols)[None, :] - np.exp(z)[:, None])
        return h @ c


@dataclass(frozen=True)
class CDRPRescaledKernel(_KernelBase):
    """``K^_zeta(W, W') = t^{-W}/(2 pi i) int_{Re Z = 1/4} dZ G_zeta(W, Z)
    (-log t) (-zeta)^{Z - W} exp(S(L Z) - S(L W)) / (t^{-W'} - t^{-Z})``, ``L = -log t``.

    ``W`` runs over ``Re W = -1/4``, ``|Im W| <= pi / L``.  With ``T = 2 pi / L`` the
    periodized sine sum is ``sum_k pi (-zeta)^{i k T} / sin(pi (W - Z - i k T))``,
    the images of ``pi / sin(pi (W - Z))`` under ``Z -> Z + i k T`` (the period of the
    rest of the integrand).
    """

    a: float
    r: float
    t: float
    zeta: complex
    nodes: int = 48
    panels: int | None = None
    inner_nodes: int = 48
    inner_panels: int | None = None
    tol: float = 1e-12

    def __post_init__(self) -> None:
        if not (0 < self.a < 1 and 0 < self.r < 1 and 0 < self.t < 1):
            raise ValueError("a, r, t must lie in (0, 1)")
        _check_zeta(self.zeta)
        if not -math.log(self.t) / 4 < -math.log(self.a):
            raise ValueError("t too small: the contours leave the analyticity strip of S_{a,r}")

    def _segment(self, re: float) -> Contour:
        h = math.pi / -math.log(self.t)
        return Contour.vertical_line(re, -h, h)

    def outer_contour(self) -> Contour:
        return self._segment(-0.25)

    def inner_contour(self) -> Contour:
        return self._segment(0.25)

    def _panels(self, given: int | None) -> int:
        # panels of height about 3 along the segment of height 2 pi / (-log t)
        return given if given is not None else max(4, math.ceil(2 * math.pi / -math.log(self.t) / 3))

    def default_rule(self) -> QuadratureRule:
        return QuadratureRule.gauss_legendre(self.nodes, self._panels(self.panels))

    def block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=complex)
        cols = np.asarray(cols, dtype=complex)
        log_mz, theta = _check_zeta(self.zeta)
        lt = -math.log(self.t)
        period = 2 * math.pi / lt
        inner = QuadratureRule.gauss_legendre(self.inner_nodes, self._panels(self.inner_panels))
        z, dz = self.inner_contour().discretize(inner)
        kmax = image_terms(theta, period, self.tol)
        while _image_tail(log_mz, period, kmax, 0.5, period) > self.tol:
            kmax += 1
        diff = z[None, :] - rows[:, None]
        g = _image_sum(diff, log_mz, period, kmax)
        s_z = s_ar_array(lt * z, self.a, self.r)
        s_w = s_ar_array(lt * rows, self.a, self.r)
        tw = np.exp(lt * rows)  # t^{-W}
        h = tw[:, None] / (2j * math.pi) * dz[None, :] * lt * g * np.exp(s_z[None, :] - s_w[:, None])
        c = 1.0 / (np.exp(lt * cols)[None, :] - np.exp(lt * z)[:, None])
        return h @ c


@dataclass(frozen=True)
class AiryKernel(_KernelBase):
    """``K_Ai`` on ``L^2(x_shift, inf)`` (Christoffel-Darboux form)."""

    x_shift: float
    nodes: int = 64
    scale: float = 2.0

    def outer_contour(self) -> Contour:
        return Contour.half_line(self.x_shift, self.scale)

    def default_rule(self) -> QuadratureRule:
        return QuadratureRule.gauss_legendre(self.nodes)

    def measure(self, dz: np.ndarray) -> np.ndarray:
        return dz.real

    def block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        return airy_kernel_matrix(np.real(rows), np.real(cols))


def airy_kernel_contour(eta: float, eta_prime: float, nodes: int = 48, reach: float = 6.0, gap: float = 1.0) -> float:
    """``K_Ai`` from its double contour integral

        1/(2 pi i)^2 int dw int dz exp(z^3/3 - z eta') / (exp(w^3/3 - w eta) (z - w)),

    with ``z`` on the rays ``gap + rho e^{+-i pi/3}`` and ``w`` on ``-gap + rho e^{+-2 i pi/3}``.
    """
    rho, wr = QuadratureRule.gauss_legendre(nodes, 4).on_interval(0.0, reach)
    zs, dzs, ws, dws = [], [], [], []
    for sgn in (-1, 1):
        ez = cmath.exp(sgn * 1j * math.pi / 3)
        ew = cmath.exp(sgn * 2j * math.pi / 3)
        zs.append(gap + rho * ez)
        dzs.append(sgn * ez * wr)  # from angle -pi/3 at infinity in, then out along +pi/3
        ws.append(-gap + rho * ew)
        dws.append(sgn * ew * wr)
    z, dz = np.concatenate(zs), np.concatenate(dzs)
    w, dw = np.concatenate(ws), np.concatenate(dws)
    fz = np.exp(z**3 / 3 - z * eta_prime) * dz
    fw = np.exp(-(w**3) / 3 + w * eta) * dw
    total = np.sum(fw[:, None] * fz[None, :] / (z[None, :] - w[:, None]))
    return float((total / (2j * math.pi) ** 2).real)


@dataclass(frozen=True)
class CDRPLimitKernel(_KernelBase):
    """``K_CDRP(eta, eta') = int_R dt e^x/(e^x + e^{-t/sigma}) Ai(t + eta) Ai(t + eta')``, ``sigma = (2/T)^{1/3}``.

    The ``t`` integral is cut where the integrand is below ``e^{-40}`` relative to
    its size (below: the Fermi factor; above: Airy decay) and integrated with
    Gauss-Legendre panels of width ``panel_width``.
    """

    x: float
    T: float
    nodes: int = 64
    scale: float | None = None
    t_nodes: int = 20
    panel_width: float = 1.0
    t_upper: float = 30.0

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise ValueError("T must be positive")

    @property
    def sigma(self) -> float:
        return (2.0 / self.T) ** (1.0 / 3.0)

    def outer_contour(self) -> Contour:
        # the kernel decays in eta on the scale sigma (Fermi factor) as well as the Airy scale
        scale = 2.0 + 2.0 * self.sigma if self.scale is None else self.scale
        return Contour.half_line(0.0, scale)

    def default_rule(self) -> QuadratureRule:
        return QuadratureRule.gauss_legendre(self.nodes)

    def measure(self, dz: np.ndarray) -> np.ndarray:
        return dz.real

    def t_rule(self) -> tuple[np.ndarray, np.ndarray]:
        lo = -self.sigma * (40.0 + self.x)
        hi = self.t_upper
        if lo >= hi:
            lo = hi - 1.0
        panels = max(1, math.ceil((hi - lo) / self.panel_width))
        tq, wq = QuadratureRule.gauss_legendre(self.t_nodes, panels).on_interval(lo, hi)
        fermi = 0.5 * (1.0 + np.tanh(0.5 * (self.x + tq / self.sigma)))
        return tq, wq * fermi

    def block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        from scipy import special

        tq, wq = self.t_rule()
        ar = special.airy(tq[None, :] + np.real(rows)[:, None])[0]
        ac = special.airy(tq[None, :] + np.real(cols)[:, None])[0]
        return (ar * wq[None, :]) @ ac.T


def specialization(a: float, r: float, tol: float = 1e-17) -> tuple[float, ...]:
    """``(a, a r, a r^2, ...)`` cut where the terms fall below ``tol``."""
    n = 1 if a < tol else 1 + int(math.ceil(math.log(tol / a) / math.log(r)))
    return tuple(a * r**j for j in range(n))


def finite_n_for_specialization(a: float, r: float, t: float, u: complex, **kw) -> FiniteNKernel:
    xs = specialization(a, r)
    return FiniteNKernel(xs, xs, t, u, **kw)

