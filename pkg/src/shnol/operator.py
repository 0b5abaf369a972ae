"""Weighted Sturm-Liouville operators, their quadratic forms and a discrete oracle.

The operator is H u = -(1/m) (a m u')' + (V + W) u acting in L^2(m dx).
Weights are stored as logarithms so that exponentially large measures
(the parabolic-plane model reaches e^(10^5)) stay representable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import kernels
from .errors import InvalidParameter, NegativeRadicand, NonPositive, NotPositiveDefinite
from .grid import Grid, GridFunction, _check_same, _frozen, trapezoid

Fn = Callable[[np.ndarray], np.ndarray]


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Coefficients:
    """Coefficient callables; ``log_m`` and ``log_a`` return natural logs."""

    log_m: Fn
    log_a: Fn = _zero
    V: Fn = _zero
    W: Fn | None = None


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    grid: Grid
    log_m: np.ndarray
    log_a: np.ndarray
    V: np.ndarray
    W: np.ndarray | None = None
    c: float | None = None
    factor: float = 1.0
    singular_lo: bool = False
    coefficients: Coefficients | None = None
    # boundary term robin_lo * u(x_lo)^2 of the form at a singular (natural) left end
    robin_lo: float = 0.0

    def __post_init__(self):
        n = self.grid.count
        for name in ("log_m", "log_a", "V") + (("W",) if self.W is not None else ()):
            arr = _frozen(np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (n,)))
            if not np.all(np.isfinite(arr)):
                raise InvalidParameter(f"{name} must be finite at every node")
            object.__setattr__(self, name, arr)
        if self.factor <= 0:
            raise InvalidParameter("measure factor must be positive")
        if not math.isfinite(self.robin_lo):
            raise InvalidParameter("boundary coefficient must be finite")
        if self.c is None:
            w_min = float(self.W.min()) if self.W is not None else 0.0
            object.__setattr__(self, "c", max(0.0, -(float(self.V.min()) + w_min)))
        elif self.c < 0:
            raise InvalidParameter(f"semibound constant must be >= 0, got {self.c}")

    @classmethod
    def build(cls, grid: Grid, coefficients: Coefficients, **kw) -> "OperatorSpec":
        x = grid.nodes
        W = None if coefficients.W is None else coefficients.W(x)
        return cls(
            grid,
            coefficients.log_m(x),
            coefficients.log_a(x),
            coefficients.V(x),
            W,
            coefficients=coefficients,
            **kw,
        )

    def on_grid(self, grid: Grid) -> "OperatorSpec":
        """Resample on another grid (needs coefficient callables)."""
        if self.coefficients is None:
            raise InvalidParameter("spec has no coefficient callables to resample")
        c = self.c if self._c_fixed else None
        return OperatorSpec.build(
            grid, self.coefficients, c=c, factor=self.factor, singular_lo=self.singular_lo,
            robin_lo=self.robin_lo,
        )

    @property
    def _c_fixed(self) -> bool:
        w_min = float(self.W.min()) if self.W is not None else 0.0
        return self.c != max(0.0, -(float(self.V.min()) + w_min))

    @property
    def x_lo(self) -> float:
        return self.grid.lo

    @property
    def x_hi(self) -> float:
        return self.grid.hi

    @property
    def m(self) -> np.ndarray:
        return np.exp(self.log_m)

    @property
    def a(self) -> np.ndarray:
        return np.exp(self.log_a)

    @property
    def eps(self) -> float:
        """Ellipticity floor: min a over the grid."""
        return float(np.exp(self.log_a.min()))

    @property
    def flux(self) -> np.ndarray:
        """p = a m, the coefficient of the conservative form."""
        return np.exp(self.log_a + self.log_m)

    @property
    def potential(self) -> np.ndarray:
        return self.V if self.W is None else self.V + self.W

    def midpoint_log_flux(self) -> np.ndarray:
        x = self.grid.nodes
        if self.coefficients is not None:
            mid = 0.5 * (x[:-1] + x[1:])
            return self.coefficients.log_a(mid) + self.coefficients.log_m(mid)
        lp = self.log_a + self.log_m
        return np.logaddexp(lp[:-1], lp[1:]) - math.log(2.0)

    def with_potential(self, V, W=None, c=None) -> "OperatorSpec":
        coeffs = None
        if self.coefficients is not None and callable(V):
            coeffs = replace(self.coefficients, V=V, W=W)
        x = self.grid.nodes
        vv = V(x) if callable(V) else V
        ww = W(x) if callable(W) else W
        return OperatorSpec(
            self.grid, self.log_m, self.log_a, vv, ww, c=c, factor=self.factor,
            singular_lo=self.singular_lo, coefficients=coeffs, robin_lo=self.robin_lo,
        )


def _norm2(spec: OperatorSpec, v: GridFunction) -> float:
    return spec.factor * trapezoid(v.values ** 2 * spec.m, spec.grid.widths)


def assemble_form(spec: OperatorSpec, u: GridFunction, v: GridFunction) -> float:
    """Q(u, v) = int a u' v' dm + int (V+W) u v dm.

    With exact gradients attached to both arguments the integrand is summed by
    the trapezoid rule cell by cell, using one-sided derivatives at kinks.
    Otherwise u and v are treated as piecewise linear: cell slopes times the
    cell integral of a m (Simpson when the coefficients are callable).
    """
    _check_same(spec.grid, u.grid)
    _check_same(spec.grid, v.grid)
    w = spec.grid.widths
    if u.has_exact_grad and v.has_exact_grad:
        (ul, ur), (vl, vr) = u.cell_slopes(), v.cell_slopes()
        p = spec.flux
        kinetic = float(0.5 * np.sum(w * (p[:-1] * ul * vl + p[1:] * ur * vr)))
    else:
        su = np.diff(u.values) / w
        sv = np.diff(v.values) / w
        p = spec.flux
        pm = np.exp(spec.midpoint_log_flux())
        cell = w * (p[:-1] + 4.0 * pm + p[1:]) / 6.0
        kinetic = float(np.sum(su * sv * cell))
    pot = trapezoid(spec.potential * u.values * v.values * spec.m, w)
    if spec.singular_lo and spec.robin_lo:
        pot += spec.robin_lo * u.values[0] * v.values[0]
    return spec.factor * (kinetic + pot)


def q_norm(spec: OperatorSpec, v: GridFunction) -> float:
    """sqrt(Q(v,v) + (1+c) ||v||^2)."""
    rad = assemble_form(spec, v, v) + (1.0 + spec.c) * _norm2(spec, v)
    if rad < 0:
        scale = abs(assemble_form(spec, v, v)) + _norm2(spec, v)
        if rad < -1e-12 * scale:
            raise NegativeRadicand(
                f"Q(v,v) + (1+c)||v||^2 = {rad:.6g} < 0; semibound c={spec.c} is too small"
            )
        rad = 0.0
    return math.sqrt(rad)


def _simpson(left, mid, right, w):
    return float(np.sum(w * (left + 4.0 * mid + right)) / 6.0)


def harmonic_residual(spec: OperatorSpec, h: GridFunction, n_bumps: int = 16) -> float:
    """Relative weak residual of (H+W)h = 0.

    max over smooth sin^2 bumps b of |Q(h, b)| / (|kinetic part| + |potential part|),
    so 0 means exact cancellation and 1 means no cancellation at all.
    Bumps span equal node counts, which keeps them resolved on graded grids.
    Cellwise Simpson, with Hermite midpoint values of h.
    """
    x = spec.grid.nodes
    hf = h if h.has_exact_grad else GridFunction(h.grid, h.values, h.slope())
    w = spec.grid.widths
    mid = 0.5 * (x[:-1] + x[1:])
    hv, hg = hf.values, hf.grad
    h_mid = 0.5 * (hv[:-1] + hv[1:]) + w * (hg[:-1] - hg[1:]) / 8.0
    hg_mid = 1.5 * (hv[1:] - hv[:-1]) / w - 0.25 * (hg[:-1] + hg[1:])
    p = spec.flux
    p_mid = np.exp(spec.midpoint_log_flux())
    qm = spec.potential * spec.m
    co = spec.coefficients
    if co is not None:
        pot_mid = co.V(mid) if co.W is None else co.V(mid) + co.W(mid)
        qm_mid = pot_mid * np.exp(co.log_m(mid))
    else:
        qm_mid = 0.5 * (qm[:-1] + qm[1:])
    edges = np.linspace(0, x.size - 1, n_bumps + 2).astype(int)
    worst = 0.0
    for k in range(n_bumps):
        lo, hi = x[edges[k]], x[edges[k + 2]]

        def bump(t):
            s = np.clip((t - lo) / (hi - lo), 0.0, 1.0)
            inside = (t > lo) & (t < hi)
            val = np.where(inside, np.sin(np.pi * s) ** 2, 0.0)
            der = np.where(inside, np.pi / (hi - lo) * np.sin(2 * np.pi * s), 0.0)
            return val, der

        b, bg = bump(x)
        bm, bgm = bump(mid)
        ki, kim = p * hg * bg, p_mid * hg_mid * bgm
        pi_, pim = qm * hv * b, qm_mid * h_mid * bm
        kin = _simpson(ki[:-1], kim, ki[1:], w)
        pot = _simpson(pi_[:-1], pim, pi_[1:], w)
        size = _simpson(np.abs(ki[:-1]), np.abs(kim), np.abs(ki[1:]), w) + _simpson(
            np.abs(pi_[:-1]), np.abs(pim), np.abs(pi_[1:]), w
        )
        if size > 0:
            worst = max(worst, abs(kin + pot) / size)
    return worst


def ground_state_transform(spec: OperatorSpec, h: GridFunction, log_h: Fn | None = None,
                           tol: float = 1e-8) -> OperatorSpec:
    """Spec of h^{-1}(H+W)h in L^2(h^2 dm): weight m h^2, same a, potential -W.

    At a natural left end Q(hv) = Q_mu(v) - p h h'(x_lo) v(x_lo)^2, so the
    zero-flux condition for u becomes a Robin condition for v = u/h.
    """
    _check_same(spec.grid, h.grid)
    if np.any(h.values <= 0):
        raise NonPositive("ground state must be positive at every node")
    res = harmonic_residual(spec, h)
    if res > tol:
        warnings.warn(f"h is not (H+W)-harmonic: residual {res:.3g}", RuntimeWarning, stacklevel=2)
    lh = np.log(h.values)
    new_W = np.zeros(spec.grid.count) if spec.W is None else -np.asarray(spec.W)
    coeffs = None
    if spec.coefficients is not None:
        base = spec.coefficients
        if log_h is None:
            xs = spec.grid.nodes

            def log_h(t, _xs=xs, _lh=lh):
                return np.interp(t, _xs, _lh)

        old_W = base.W

        def log_m(t, _lm=base.log_m, _lh=log_h):
            return _lm(t) + 2.0 * _lh(t)

        def V(t, _w=old_W):
            return _zero(t) if _w is None else -_w(t)

        coeffs = Coefficients(log_m=log_m, log_a=base.log_a, V=V)
    robin = 0.0
    if spec.singular_lo:
        dlh0 = float(h.grad[0] if h.has_exact_grad else h.slope()[0]) / h.values[0]
        p_mu0 = math.exp(float(spec.log_a[0] + spec.log_m[0] + 2.0 * lh[0]))
        robin = spec.robin_lo * h.values[0] ** 2 - p_mu0 * dlh0
    return OperatorSpec(
        spec.grid, spec.log_m + 2.0 * lh, spec.log_a, new_W, None,
        factor=spec.factor, singular_lo=spec.singular_lo, coefficients=coeffs, robin_lo=robin,
    )


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Symmetric tridiagonal S = M^{-1/2} K M^{-1/2} on the active nodes.

    ``K`` is the stiffness matrix of the form (potential included) and ``M``
    the lumped mass; ``active`` indexes the grid nodes carrying unknowns.
    """

    grid: Grid
    active: np.ndarray
    diag: np.ndarray
    offdiag: np.ndarray
    mass: np.ndarray
    k_diag: np.ndarray
    k_off: np.ndarray
    c: float = 0.0

    @property
    def size(self) -> int:
        return self.diag.size

    def bounds(self) -> tuple[float, float]:
        """Gershgorin interval enclosing the spectrum."""
        o = np.abs(self.offdiag)
        rad = np.zeros_like(self.diag)
        rad[:-1] += o
        rad[1:] += o
        return float((self.diag - rad).min()), float((self.diag + rad).max())


@dataclass(frozen=True)
class SpectrumEstimate:
    eigenvalues: np.ndarray
    truncation: float
    mesh: float
    boundary: str = "dirichlet"


def discretize(spec: OperatorSpec) -> DiscreteOperator:
    """Conservative three-point scheme with lumped mass.

    Dirichlet ends drop the boundary nodes; at a singular left endpoint node 0
    is kept with zero flux through x_lo (the reflection condition u'(0)=0).
    """
    n = spec.grid.count
    if n < 10:
        raise InvalidParameter("discretize needs at least 10 nodes")
    if spec.log_m.max() > 700 or np.abs(spec.log_a + spec.log_m).max() > 700:
        raise InvalidParameter("coefficients leave the double range")
    w = spec.grid.widths
    m = spec.m
    pm = np.exp(spec.midpoint_log_flux())
    cond = pm / w
    # dual-cell mass: trapezoid of m over each half cell
    mass = np.zeros(n)
    mass[1:] += 0.5 * w * (m[:-1] + 3.0 * m[1:]) / 4.0
    mass[:-1] += 0.5 * w * (3.0 * m[:-1] + m[1:]) / 4.0
    kd = np.zeros(n)
    kd[1:] += cond
    kd[:-1] += cond
    kd += mass * spec.potential
    if spec.singular_lo:
        kd[0] += spec.robin_lo
    ko = -cond
    lo = 0 if spec.singular_lo else 1
    hi = n - 1
    active = np.arange(lo, hi)
    kd_a = kd[lo:hi]
    ko_a = ko[lo:hi - 1]
    ma = mass[lo:hi]
    if np.any(ma <= 0) or not np.all(np.isfinite(ma)):
        raise InvalidParameter("lumped mass must be positive and finite")
    s = 1.0 / np.sqrt(ma)
    diag = kd_a * s * s
    off = ko_a * s[:-1] * s[1:]
    return DiscreteOperator(
        spec.grid, active, _frozen(diag), _frozen(off), _frozen(ma),
        _frozen(kd_a), _frozen(ko_a), c=spec.c,
    )


def _eig_range(op: DiscreteOperator, il: int, iu: int, tol: float = 1e-15) -> np.ndarray:
    lo, hi = op.bounds()
    span = hi - lo
    off2 = np.ascontiguousarray(op.offdiag ** 2)
    diag = np.ascontiguousarray(op.diag)
    return kernels.bisect_eigs(diag, off2, lo - 1e-9 * span, hi + 1e-9 * span, il, iu, tol)


def eigenvalues_tridiagonal(op: DiscreteOperator, k: int) -> SpectrumEstimate:
    """The k smallest eigenvalues by Sturm bisection."""
    if not 0 < k <= op.size:
        raise InvalidParameter(f"k must lie in [1, {op.size}], got {k}")
    ev = _eig_range(op, 0, k)
    return SpectrumEstimate(np.sort(ev), op.grid.hi, op.grid.mesh)


def count_below(op: DiscreteOperator, x: float) -> int:
    return kernels.sturm_count(
        np.ascontiguousarray(op.diag), np.ascontiguousarray(op.offdiag ** 2), float(x)
    )


def eigenvalues_near(op: DiscreteOperator, lam: float, width: int = 1) -> np.ndarray:
    """Up to 2*width eigenvalues bracketing ``lam`` (width on each side)."""
    j = count_below(op, lam)
    il, iu = max(0, j - width), min(op.size, j + width)
    return _eig_range(op, il, iu)


def distance_to_spectrum(op: DiscreteOperator, lam: float) -> float:
    ev = eigenvalues_near(op, lam)
    return float(np.min(np.abs(ev - lam)))


def _restrict(op: DiscreteOperator, f: GridFunction) -> np.ndarray:
    _check_same(op.grid, f.grid)
    return np.ascontiguousarray(f.values[op.active])


def _extend(op: DiscreteOperator, vals: np.ndarray) -> GridFunction:
    full = np.zeros(op.grid.count)
    full[op.active] = vals
    return GridFunction(op.grid, full)


def solve_shifted(op: DiscreteOperator, shift: float, rhs: GridFunction) -> GridFunction:
    """Solve (H_d + shift) z = rhs, with H_d = M^{-1} K."""
    if count_below(op, -shift) > 0:
        raise NotPositiveDefinite(f"H_d + {shift} is not positive definite")
    b = _restrict(op, rhs)
    sq = np.sqrt(op.mass)
    y = _solve_sym(op, shift, sq * b)
    return _extend(op, y / sq)


def _solve_sym(op: DiscreteOperator, shift: float, b: np.ndarray) -> np.ndarray:
    try:
        return kernels.tridiag_solve(
            np.ascontiguousarray(op.diag + shift), np.ascontiguousarray(op.offdiag), b
        )
    except ZeroDivisionError as exc:
        raise NotPositiveDefinite(str(exc)) from exc


def apply(op: DiscreteOperator, f: GridFunction) -> GridFunction:
    """H_d f on the active nodes (zero elsewhere)."""
    v = _restrict(op, f)
    kv = kernels.tridiag_matvec(np.ascontiguousarray(op.k_diag), np.ascontiguousarray(op.k_off), v)
    return _extend(op, kv / op.mass)


def weyl_residual_dual_norm(spec: OperatorSpec, w: GridFunction, lam: float,
                            op: DiscreteOperator | None = None) -> float:
    """sup over ||v||_Q <= 1 of |Q(w,v) - lam <w,v>| for w normalized in L^2(m).

    The weak residual r = (K - lam M) w is measured in the norm dual to
    v^T (K + (1+c) M) v, i.e. sqrt(r^T (K + (1+c)M)^{-1} r).
    """
    if op is None:
        op = discretize(spec)
    _check_same(op.grid, w.grid)
    wv = _restrict(op, w)
    nrm = math.sqrt(float(np.sum(op.mass * wv * wv)))
    if nrm == 0:
        raise InvalidParameter("w vanishes on the active nodes")
    wv = wv / nrm
    r = kernels.tridiag_matvec(
        np.ascontiguousarray(op.k_diag), np.ascontiguousarray(op.k_off), wv
    ) - lam * op.mass * wv
    rt = r / np.sqrt(op.mass)
    z = _solve_sym(op, 1.0 + op.c, np.ascontiguousarray(rt))
    return math.sqrt(max(float(np.dot(rt, z)), 0.0))


def check_semibound(spec: OperatorSpec, op: DiscreteOperator | None = None, tol: float = 1e-9) -> bool:
    """True when the discrete form satisfies Q(v,v) >= -c ||v||^2."""
    if op is None:
        op = discretize(spec)
    return count_below(op, -spec.c - tol * max(1.0, spec.c)) == 0
