"""Integration contours and the quadrature rules that discretize them.

A ``Contour`` is a parameterized curve ``z(s)``; ``Contour.discretize(rule)``
returns nodes ``z_j`` lying exactly on the curve and complex weights
``dz_j = z'(s_j) * w_j`` so that ``sum_j f(z_j) dz_j`` approximates the line
integral of ``f`` in the contour's orientation.

Closed circles use the periodic trapezoid rule (spectrally accurate for
integrands analytic in an annulus).  Open curves use Gauss-Legendre panels
whose breakpoints include every corner of the curve.  Half-lines ``[x, inf)``
are mapped to ``(0, 1)`` by ``xi = x - scale * log(1 - v)`` before Gauss-Legendre
is applied; the Airy-type integrands decay like ``exp(-c xi^{3/2})`` so the
mapped integrands vanish to all orders at ``v = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TRAPEZOID = "trapezoid-periodic"
GAUSS_LEGENDRE = "gauss-legendre-panel"


@dataclass(frozen=True)
class QuadratureRule:
    """``nodes`` points in total for the trapezoid rule, ``nodes`` per panel for Gauss-Legendre.

    ``panels`` is the number of equal-width panels between consecutive breakpoints of
    the contour (corner points always split panels).
    """

    kind: str
    nodes: int
    panels: int = 1

    def __post_init__(self) -> None:
        if self.kind not in (TRAPEZOID, GAUSS_LEGENDRE):
            raise ValueError(f"unknown quadrature kind {self.kind!r}")
        if self.nodes < 1 or self.panels < 1:
            raise ValueError("node and panel counts must be positive")

    @classmethod
    def trapezoid(cls, nodes: int) -> QuadratureRule:
        return cls(TRAPEZOID, nodes)

    @classmethod
    def gauss_legendre(cls, nodes: int, panels: int = 1) -> QuadratureRule:
        return cls(GAUSS_LEGENDRE, nodes, panels)

    def doubled(self) -> QuadratureRule:
        """The same layout at twice the resolution (used for self-consistency checks)."""
        if self.kind == TRAPEZOID:
            return QuadratureRule(self.kind, 2 * self.nodes)
        return QuadratureRule(self.kind, self.nodes, 2 * self.panels)

    def on_interval(self, lo: float, hi: float, breaks: tuple[float, ...] = ()) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and positive weights on ``[lo, hi]`` (``breaks`` are interior panel edges)."""
        if not hi > lo:
            raise ValueError("empty parameter interval")
        if self.kind == TRAPEZOID:
            # periodic rule: left endpoints of equal cells
            h = (hi - lo) / self.nodes
            return lo + h * np.arange(self.nodes), np.full(self.nodes, h)
        edges = [lo, *sorted(b for b in breaks if lo < b < hi), hi]
        x_ref, w_ref = np.polynomial.legendre.leggauss(self.nodes)
        xs, ws = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            cuts = np.linspace(a, b, self.panels + 1)
            for c0, c1 in zip(cuts[:-1], cuts[1:]):
                half = 0.5 * (c1 - c0)
                xs.append(c0 + half * (x_ref + 1.0))
                ws.append(half * w_ref)
        return np.concatenate(xs), np.concatenate(ws)


@dataclass(frozen=True)
class Contour:
    """A parameterized curve.

    kinds and their ``params``:

    * ``circle``: ``(center, radius)``; ``s = theta`` in ``[0, 2 pi)``.
    * ``vertical_line``: ``(re, im_lo, im_hi)``; ``z = re + i s`` over the truncated range.
    * ``wedge``: ``(apex, slope, im_half_width)``; ``z = apex + slope |s| + i s``,
      ``s`` in ``[-h, h]`` with a corner at ``s = 0``.  ``slope = -A`` gives the
      left-opening contour and ``slope = +A`` the right-opening one.
    * ``segment``: ``(z0, z1)``.
    * ``half_line``: ``(start, scale)``; the real ray ``[start, inf)`` via
      ``xi = start - scale log(1 - v)``, ``v`` in ``(0, 1)``.

    ``orientation`` is ``+1`` for the natural direction of the parameter and ``-1``
    for the reverse.
    """

    kind: str
    params: tuple
    orientation: int = 1
    truncation: tuple[float, float] | None = field(default=None)

    def __post_init__(self) -> None:
        if self.kind not in ("circle", "vertical_line", "wedge", "segment", "half_line"):
            raise ValueError(f"unknown contour kind {self.kind!r}")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        if self.kind == "circle" and not self.params[1] > 0:
            raise ValueError("circle radius must be positive")

    # -- constructors -------------------------------------------------------
    @classmethod
    def circle(cls, radius: float, center: complex = 0.0) -> Contour:
        return cls("circle", (complex(center), float(radius)))

    @classmethod
    def vertical_line(cls, re: float, im_lo: float, im_hi: float) -> Contour:
        return cls("vertical_line", (float(re), float(im_lo), float(im_hi)), truncation=(im_lo, im_hi))

    @classmethod
    def wedge(cls, slope: float, apex: float = 0.0, im_half_width: float = math.pi) -> Contour:
        return cls("wedge", (float(apex), float(slope), float(im_half_width)))

    @classmethod
    def segment(cls, z0: complex, z1: complex) -> Contour:
        return cls("segment", (complex(z0), complex(z1)))

    @classmethod
    def half_line(cls, start: float, scale: float = 2.0) -> Contour:
        return cls("half_line", (float(start), float(scale)), truncation=(float(start), math.inf))

    @property
    def closed(self) -> bool:
        return self.kind == "circle"

    def default_rule(self, nodes: int) -> QuadratureRule:
        return QuadratureRule.trapezoid(nodes) if self.closed else QuadratureRule.gauss_legendre(nodes)

    # -- geometry -----------------------------------------------------------
    def _parameter_range(self) -> tuple[float, float, tuple[float, ...]]:
        if self.kind == "circle":
            return 0.0, 2 * math.pi, ()
        if self.kind == "vertical_line":
            return self.params[1], self.params[2], ()
        if self.kind == "wedge":
            h = self.params[2]
            return -h, h, (0.0,)
        return 0.0, 1.0, ()

    def point(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.kind == "circle":
            c, rad = self.params
            return c + rad * np.exp(1j * s)
        if self.kind == "vertical_line":
            return self.params[0] + 1j * s
        if self.kind == "wedge":
            apex, slope, _ = self.params
            return apex + slope * np.abs(s) + 1j * s
        if self.kind == "segment":
            z0, z1 = self.params
            return z0 + (z1 - z0) * s
        start, scale = self.params
        return start - scale * np.log1p(-s) + 0j

    def derivative(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.kind == "circle":
            _, rad = self.params
            return 1j * rad * np.exp(1j * s)
        if self.kind == "vertical_line":
            return np.full(s.shape, 1j)
        if self.kind == "wedge":
            slope = self.params[1]
            return slope * np.sign(s) + 1j
        if self.kind == "segment":
            z0, z1 = self.params
            return np.full(s.shape, z1 - z0, dtype=complex)
        scale = self.params[1]
        return scale / (1.0 - s) + 0j

    def discretize(self, rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
        """``(nodes, dz)``: points on the curve and complex line-element weights."""
        if rule.kind == TRAPEZOID and not self.closed:
            raise ValueError("the periodic trapezoid rule needs a closed contour")
        lo, hi, breaks = self._parameter_range()
        s, w = rule.on_interval(lo, hi, breaks)
        z = self.point(s)
        dz = self.derivative(s) * w * self.orientation
        return z, dz

    def length(self, rule: QuadratureRule) -> float:
        """Arc length estimated with ``rule`` (``sum |dz|``)."""
        return float(np.sum(np.abs(self.discretize(rule)[1])))
