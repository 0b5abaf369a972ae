"""Nonuniform 1D grids, grid functions, differentiation and quadrature."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyWindow, GridMismatch, InvalidParameter, InvalidRange, UnderResolved

#: minimum node count for a window to count as resolved
MIN_WINDOW_NODES = 8


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing node set with at least three nodes."""

    nodes: np.ndarray

    def __post_init__(self):
        x = _frozen(self.nodes)
        if x.ndim != 1 or x.size < 3:
            raise InvalidParameter(f"grid needs >= 3 nodes, got {x.size}")
        if not np.all(np.isfinite(x)):
            raise InvalidParameter("grid nodes must be finite")
        if np.any(np.diff(x) <= 0):
            raise InvalidParameter("grid nodes must be strictly increasing")
        object.__setattr__(self, "nodes", x)

    @property
    def count(self) -> int:
        return self.nodes.size

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def lo(self) -> float:
        return float(self.nodes[0])

    @property
    def hi(self) -> float:
        return float(self.nodes[-1])

    @property
    def mesh(self) -> float:
        return float(self.widths.max())

    def same_as(self, other: "Grid") -> bool:
        return self is other or (
            self.count == other.count and np.array_equal(self.nodes, other.nodes)
        )

    def with_nodes(self, extra: Sequence[float], min_gap: float = 1e-9) -> "Grid":
        """Grid with ``extra`` points inserted (points closer than ``min_gap``
        times the local width to an existing node snap onto that node)."""
        x = self.nodes
        pts = np.asarray([p for p in extra if x[0] < p < x[-1]], dtype=float)
        if pts.size == 0:
            return self
        idx = np.searchsorted(x, pts)
        left, right = x[idx - 1], x[idx]
        tol = min_gap * (right - left)
        keep = (pts - left > tol) & (right - pts > tol)
        return Grid(np.unique(np.concatenate([x, pts[keep]])))

    def halved(self) -> "Grid":
        """Grid with the midpoint of every cell added."""
        x = self.nodes
        mid = 0.5 * (x[:-1] + x[1:])
        out = np.empty(2 * x.size - 1)
        out[0::2] = x
        out[1::2] = mid
        return Grid(out)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values on a grid; ``grad`` optionally carries an exact derivative."""

    grid: Grid
    values: np.ndarray
    grad: np.ndarray | None = None
    cell_grad: tuple | None = None

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.grid.count,):
            raise GridMismatch(f"expected {self.grid.count} values, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidParameter("grid function values must be finite")
        object.__setattr__(self, "values", v)
        if self.grad is not None:
            g = _frozen(self.grad)
            if g.shape != v.shape:
                raise GridMismatch("gradient shape does not match values")
            object.__setattr__(self, "grad", g)
        if self.cell_grad is not None:
            gl, gr = (_frozen(a) for a in self.cell_grad)
            if gl.shape != (v.size - 1,) or gr.shape != gl.shape:
                raise GridMismatch("cell gradients need one entry per cell")
            object.__setattr__(self, "cell_grad", (gl, gr))

    @classmethod
    def sample(cls, grid: Grid, fn, dfn=None) -> "GridFunction":
        x = grid.nodes
        vals = np.broadcast_to(np.asarray(fn(x), dtype=float), x.shape)
        grad = None
        if dfn is not None:
            grad = np.broadcast_to(np.asarray(dfn(x), dtype=float), x.shape)
        return cls(grid, vals, grad)

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def slope(self) -> np.ndarray:
        """Exact gradient when attached, finite differences otherwise."""
        if self.grad is not None:
            return self.grad
        return derivative(self).values

    @property
    def has_exact_grad(self) -> bool:
        return self.grad is not None or self.cell_grad is not None

    def cell_slopes(self) -> tuple[np.ndarray, np.ndarray]:
        """Derivative at the left and right end of every cell, taken inside the cell.

        Functions with kinks at nodes carry these one-sided values explicitly.
        """
        if self.cell_grad is not None:
            return self.cell_grad
        g = self.slope()
        return g[:-1], g[1:]

    def scaled(self, alpha: float) -> "GridFunction":
        g = None if self.grad is None else alpha * self.grad
        cg = None if self.cell_grad is None else tuple(alpha * a for a in self.cell_grad)
        return GridFunction(self.grid, alpha * self.values, g, cg)

    def __mul__(self, other: "GridFunction") -> "GridFunction":
        """Pointwise product, with the product rule on attached gradients."""
        _check_same(self.grid, other.grid)
        u, v = self.values, other.values
        g = cg = None
        if self.grad is not None and other.grad is not None:
            g = self.grad * v + u * other.grad
        elif self.has_exact_grad and other.has_exact_grad:
            (al, ar), (bl, br) = self.cell_slopes(), other.cell_slopes()
            cg = (al * v[:-1] + u[:-1] * bl, ar * v[1:] + u[1:] * br)
        return GridFunction(self.grid, u * v, g, cg)


@dataclass(frozen=True)
class LogQuantity:
    """Signed number stored as ``sign * exp(log_magnitude)``."""

    sign: int
    log_magnitude: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise InvalidParameter("sign must be -1, 0 or +1")
        if self.sign == 0 and self.log_magnitude != -math.inf:
            object.__setattr__(self, "log_magnitude", -math.inf)

    @classmethod
    def from_float(cls, value: float) -> "LogQuantity":
        if value == 0:
            return cls(0, -math.inf)
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    def to_float(self) -> float:
        if self.sign == 0:
            return 0.0
        try:
            return self.sign * math.exp(self.log_magnitude)
        except OverflowError:
            return self.sign * math.inf

    def sqrt(self) -> "LogQuantity":
        if self.sign < 0:
            raise ValueError("square root of a negative LogQuantity")
        return LogQuantity(self.sign, 0.5 * self.log_magnitude)


def _check_same(a: Grid, b: Grid):
    if not a.same_as(b):
        raise GridMismatch("grid functions live on different grids")


def make_graded_grid(x_lo: float, x_hi: float, n_cells: int, grading="uniform") -> Grid:
    """Grid on [x_lo, x_hi] with ``n_cells`` cells.

    ``grading`` is ``"uniform"`` or ``("geometric", ratio)``; with a geometric
    grading consecutive widths grow by ``ratio``, so ratio > 1 clusters nodes
    near ``x_lo``.
    """
    if not x_lo < x_hi:
        raise InvalidRange(f"need x_lo < x_hi, got [{x_lo}, {x_hi}]")
    if n_cells < 2:
        raise InvalidParameter(f"n_cells must be >= 2, got {n_cells}")
    if grading == "uniform":
        nodes = np.linspace(x_lo, x_hi, n_cells + 1)
    else:
        kind, ratio = grading
        if kind != "geometric":
            raise InvalidParameter(f"unknown grading {kind!r}")
        if ratio <= 0:
            raise InvalidParameter(f"ratio must be > 0, got {ratio}")
        if ratio == 1:
            nodes = np.linspace(x_lo, x_hi, n_cells + 1)
        else:
            w = ratio ** np.arange(n_cells)
            cum = np.concatenate([[0.0], np.cumsum(w)])
            nodes = x_lo + (x_hi - x_lo) * cum / cum[-1]
    nodes[0], nodes[-1] = x_lo, x_hi
    return Grid(nodes)


def make_banded_grid(x_lo, x_hi, anchors, step, half_width, coarse_cells=64) -> Grid:
    """Coarse uniform grid plus uniform bands of spacing ``step`` around anchors.

    Used when integrands are exponentially concentrated near a few points.
    """
    parts = [np.linspace(x_lo, x_hi, coarse_cells + 1)]
    for a in anchors:
        lo, hi = max(x_lo, a - half_width), min(x_hi, a + half_width)
        if hi > lo:
            parts.append(np.linspace(lo, hi, int(math.ceil((hi - lo) / step)) + 1))
    x = np.unique(np.concatenate(parts))
    keep = np.concatenate([[True], np.diff(x) > 1e-12 * max(1.0, abs(x_hi))])
    return Grid(x[keep])


def integrate(f: GridFunction, weight: GridFunction) -> float:
    """Composite trapezoid value of the integral of f * weight."""
    _check_same(f.grid, weight.grid)
    return trapezoid(f.values * weight.values, f.grid.widths)


def trapezoid(values: np.ndarray, widths: np.ndarray) -> float:
    return float(0.5 * np.sum(widths * (values[:-1] + values[1:])))


def _signed_logsumexp(signs, logs) -> LogQuantity:
    signs = np.asarray(signs)
    logs = np.asarray(logs, dtype=float)
    pos = logs[signs > 0]
    neg = logs[signs < 0]
    lp = np.logaddexp.reduce(pos) if pos.size else -math.inf
    ln = np.logaddexp.reduce(neg) if neg.size else -math.inf
    if lp == ln:
        return LogQuantity(0, -math.inf)
    if lp > ln:
        return LogQuantity(1, float(lp + np.log1p(-np.exp(ln - lp))))
    return LogQuantity(-1, float(ln + np.log1p(-np.exp(lp - ln))))


def log_sum(terms: Sequence[LogQuantity]) -> LogQuantity:
    """Exact-sign sum of LogQuantities without leaving the log domain."""
    live = [t for t in terms if t.sign != 0]
    if not live:
        return LogQuantity(0, -math.inf)
    return _signed_logsumexp([t.sign for t in live], [t.log_magnitude for t in live])


def cell_integral_log(widths, left, right) -> LogQuantity:
    """Sum over cells of w/2 * (left + right); ends given as (signs, logs) pairs."""
    half = np.log(0.5 * np.asarray(widths, dtype=float))
    signs = np.concatenate([left[0], right[0]])
    logs = np.concatenate([left[1] + half, right[1] + half])
    live = signs != 0
    if not live.any():
        return LogQuantity(0, -math.inf)
    return _signed_logsumexp(signs[live], logs[live])


def to_log(values) -> tuple[np.ndarray, np.ndarray]:
    """(signs, log|values|) of a float array, with -inf for zeros."""
    v = np.asarray(values, dtype=float)
    with np.errstate(divide="ignore"):
        return np.sign(v).astype(int), np.log(np.abs(v))


def integrate_log(f_log, dx) -> LogQuantity:
    """Trapezoid sum of node values given in log form, accumulated by log-sum-exp.

    ``f_log`` is a sequence of :class:`LogQuantity` (one per node) or a pair of
    arrays ``(signs, log_magnitudes)``; ``dx`` holds the cell widths.
    """
    if isinstance(f_log, tuple) and len(f_log) == 2 and not isinstance(f_log[0], LogQuantity):
        signs, logs = (np.asarray(a) for a in f_log)
    else:
        signs = np.array([q.sign for q in f_log])
        logs = np.array([q.log_magnitude for q in f_log], dtype=float)
    dx = np.asarray(dx, dtype=float)
    if signs.size != dx.size + 1 or logs.size != signs.size:
        raise GridMismatch("need one more node value than cell widths")
    half = np.log(0.5 * dx)
    term_signs = np.concatenate([signs[:-1], signs[1:]])
    term_logs = np.concatenate([logs[:-1] + half, logs[1:] + half])
    live = term_signs != 0
    return _signed_logsumexp(term_signs[live], term_logs[live])


def derivative(f: GridFunction) -> GridFunction:
    """Second-order finite differences on the native nonuniform grid."""
    x, y = f.grid.nodes, f.values
    h = np.diff(x)
    d = np.empty_like(y)
    hl, hr = h[:-1], h[1:]
    d[1:-1] = (
        -hr / (hl * (hl + hr)) * y[:-2]
        + (hr - hl) / (hl * hr) * y[1:-1]
        + hl / (hr * (hl + hr)) * y[2:]
    )
    h0, h1 = h[0], h[1]
    d[0] = (
        -(2 * h0 + h1) / (h0 * (h0 + h1)) * y[0]
        + (h0 + h1) / (h0 * h1) * y[1]
        - h0 / (h1 * (h0 + h1)) * y[2]
    )
    h0, h1 = h[-1], h[-2]
    d[-1] = (
        (2 * h0 + h1) / (h0 * (h0 + h1)) * y[-1]
        - (h0 + h1) / (h0 * h1) * y[-2]
        + h0 / (h1 * (h0 + h1)) * y[-3]
    )
    return GridFunction(f.grid, d)


def window_mask(grid: Grid, x_lo: float, x_hi: float, min_nodes: int = 1) -> np.ndarray:
    """Boolean mask of the nodes inside the closed window [x_lo, x_hi]."""
    x = grid.nodes
    if x_hi < x[0] or x_lo > x[-1]:
        raise EmptyWindow(f"window [{x_lo}, {x_hi}] misses the grid span")
    # nodes within rounding distance of an endpoint count as inside
    slack = 1e-12 * max(1.0, abs(x_lo), abs(x_hi))
    mask = (x >= x_lo - slack) & (x <= x_hi + slack)
    k = int(mask.sum())
    if k == 0:
        raise EmptyWindow(f"no node inside [{x_lo}, {x_hi}]")
    if k < min_nodes:
        raise UnderResolved(f"window [{x_lo}, {x_hi}] holds {k} < {min_nodes} nodes")
    return mask


def sup_abs_on(f: GridFunction, x_lo: float, x_hi: float) -> float:
    return float(np.max(np.abs(f.values[window_mask(f.grid, x_lo, x_hi)])))


def inf_abs_on(f: GridFunction, x_lo: float, x_hi: float) -> float:
    return float(np.min(np.abs(f.values[window_mask(f.grid, x_lo, x_hi)])))
