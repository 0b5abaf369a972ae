"""Shooting for generalized eigenfunctions, Bessel functions, Green functions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from functools import lru_cache

import numpy as np
from scipy.integrate import quad, solve_ivp

from . import kernels
from .errors import (
    CriticalOperator,
    InvalidParameter,
    NonPositive,
    OutOfRange,
    ShootingOverflow,
)
from .grid import Grid, GridFunction
from .operator import OperatorSpec

_RESCALE = 1e150
_OVERFLOW = 1e300


@dataclass(frozen=True)
class ShootingConfig:
    x_start: float
    u0: float
    du0: float
    step: float = 1e-3
    method: str = "rk4"

    def __post_init__(self):
        if not self.step > 0:
            raise InvalidParameter(f"step must be > 0, got {self.step}")
        if self.u0 == 0 and self.du0 == 0:
            raise InvalidParameter("initial data (u0, du0) must not both vanish")
        if self.method != "rk4":
            raise InvalidParameter(f"unknown method {self.method!r}")


def _refine(x: np.ndarray, step: float):
    """Subdivide every cell of ``x`` into pieces of width <= step.

    Returns the fine nodes and the positions of the original nodes in them.
    """
    h = np.diff(x)
    k = np.maximum(1, np.ceil(np.abs(h) / step - 1e-9).astype(np.int64))
    first = np.cumsum(k) - k
    j = np.arange(k.sum()) - np.repeat(first, k)
    fine = np.append(np.repeat(x[:-1], k) + j * np.repeat(h / k, k), x[-1])
    idx = np.append(0, np.cumsum(k))
    return fine, idx


def _lattice_coeffs(spec: OperatorSpec, lam: float, fine: np.ndarray):
    co = spec.coefficients
    if co is None:
        raise InvalidParameter("shooting needs coefficient callables on the spec")
    half = np.empty(2 * fine.size - 1)
    half[0::2] = fine
    half[1::2] = 0.5 * (fine[:-1] + fine[1:])
    lm = co.log_m(half)
    la = co.log_a(half)
    if lm.max() > 700 or -(lm + la).min() > 700 or (lm + la).max() > 700:
        raise ShootingOverflow("coefficients leave the double range on the shooting interval")
    pot = co.V(half) if co.W is None else co.V(half) + co.W(half)
    invp = np.exp(-(lm + la))
    q = np.exp(lm) * (pot - lam)
    return np.ascontiguousarray(invp), np.ascontiguousarray(q)


def shoot(spec, lam, x_path, u0, f0, step):
    """RK4 along the monotone path ``x_path`` for (u, p u').

    Returns u, flux and the accumulated log scale at the path nodes.
    """
    fine, idx = _refine(np.asarray(x_path, dtype=float), step)
    invp, q = _lattice_coeffs(spec, lam, fine)
    u, f, logs = kernels.rk4_linear(np.ascontiguousarray(fine), invp, q, float(u0), float(f0), _RESCALE)
    return u[idx], f[idx], logs[idx]


def _flux_at(spec: OperatorSpec, x: float) -> float:
    co = spec.coefficients
    return float(np.exp(co.log_a(np.array([x]))[0] + co.log_m(np.array([x]))[0]))


def shoot_on_grid(spec: OperatorSpec, lam: float, cfg: ShootingConfig, grid: Grid):
    """Shoot both ways from cfg.x_start; returns (u, flux, logs) on ``grid``."""
    x = grid.nodes
    xs = cfg.x_start
    f0 = _flux_at(spec, xs) * cfg.du0
    u = np.empty_like(x)
    f = np.empty_like(x)
    logs = np.empty_like(x)
    right = x > xs
    left = x < xs
    at = x == xs
    u[at], f[at], logs[at] = cfg.u0, f0, 0.0
    if right.any():
        path = np.concatenate([[xs], x[right]])
        ur, fr, lr = shoot(spec, lam, path, cfg.u0, f0, cfg.step)
        u[right], f[right], logs[right] = ur[1:], fr[1:], lr[1:]
    if left.any():
        path = np.concatenate([[xs], x[left][::-1]])
        ul, fl, ll = shoot(spec, lam, path, cfg.u0, f0, cfg.step)
        u[left], f[left], logs[left] = ul[1:][::-1], fl[1:][::-1], ll[1:][::-1]
    return u, f, logs


def integrate_ode_sl(spec: OperatorSpec, lam: float, cfg: ShootingConfig, grid: Grid) -> GridFunction:
    """Solution of (a m u')' = m (V+W-lam) u with u(x_start)=u0, u'(x_start)=du0.

    The exact derivative u' = flux/(a m) is attached as the gradient.
    """
    u, f, logs = shoot_on_grid(spec, lam, cfg, grid)
    top = float(logs.max())
    if top > 0:
        if top > math.log(_OVERFLOW) - math.log(max(np.abs(u).max(), 1e-300)):
            raise ShootingOverflow("solution exceeds 1e300; renormalize or shrink the range")
        scale = np.exp(logs)
        u, f = u * scale, f * scale
    p = np.exp(spec.coefficients.log_a(grid.nodes) + spec.coefficients.log_m(grid.nodes))
    return GridFunction(grid, u, f / p)


def regular_flux(spec: OperatorSpec, lam: float) -> float:
    """Flux p u' at x_lo of the solution regular at a singular endpoint 0 with u(0)=1.

    Uses u ~ 1 on [0, x_lo], so p u'(x_lo) = int_0^{x_lo} m (V+W-lam) dt.
    """
    x_lo = spec.x_lo
    if x_lo <= 0:
        return 0.0
    co = spec.coefficients

    def g(t):
        t = np.array([t])
        pot = co.V(t) if co.W is None else co.V(t) + co.W(t)
        return float(np.exp(co.log_m(t))[0] * (pot[0] - lam))

    val, _ = quad(g, 0.0, x_lo, limit=200)
    return val


# ---------------------------------------------------------------- Bessel

_EULER = "0.57721566490153286060651209008240243104215933593992"
_PI = "3.14159265358979323846264338327950288419716939937511"


def _series_float(x: np.ndarray):
    """J0, J1, Y0, Y1 by power series (accurate for 0 < x <= 8)."""
    t = 0.25 * x * x
    j0 = np.zeros_like(x)
    j1 = np.zeros_like(x)
    s0 = np.zeros_like(x)
    s1 = np.zeros_like(x)
    a0 = np.ones_like(x)  # (-t)^k / (k!)^2
    a1 = 0.5 * x  # (-t)^k (x/2) / (k!(k+1)!)
    hk = 0.0
    psi_sum = 1.0 - 2.0 * np.euler_gamma  # psi(1)+psi(2)
    for k in range(40):
        j0 += a0
        j1 += a1
        if k > 0:
            s0 -= hk * a0
        s1 += psi_sum * a1
        hk += 1.0 / (k + 1)
        psi_sum += 1.0 / (k + 1) + 1.0 / (k + 2)
        a0 = -a0 * t / ((k + 1) ** 2)
        a1 = -a1 * t / ((k + 1) * (k + 2))
    with np.errstate(divide="ignore"):
        lg = np.log(0.5 * x)
    y0 = (2.0 / np.pi) * ((lg + np.euler_gamma) * j0 + s0)
    y1 = -2.0 / (np.pi * x) + (2.0 / np.pi) * lg * j1 - s1 / np.pi
    return j0, j1, y0, y1


@lru_cache(maxsize=65536)
def _series_decimal(x: float):
    """Same series in 50-digit decimal arithmetic (for the cancellation zone)."""
    with localcontext() as ctx:
        ctx.prec = 50
        X = Decimal(x)
        gamma = Decimal(_EULER)
        pi = Decimal(_PI)
        t = X * X / 4
        a0 = Decimal(1)
        a1 = X / 2
        j0 = j1 = s0 = s1 = Decimal(0)
        hk = Decimal(0)
        psi_sum = 1 - 2 * gamma
        eps = Decimal(10) ** -45
        k = 0
        while True:
            j0 += a0
            j1 += a1
            if k > 0:
                s0 -= hk * a0
            s1 += psi_sum * a1
            hk += Decimal(1) / (k + 1)
            psi_sum += Decimal(1) / (k + 1) + Decimal(1) / (k + 2)
            a0 = -a0 * t / ((k + 1) ** 2)
            a1 = -a1 * t / ((k + 1) * (k + 2))
            k += 1
            if k > 10 and abs(a0) < eps and abs(a1) < eps:
                break
        lg = (X / 2).ln()
        y0 = (2 / pi) * ((lg + gamma) * j0 + s0)
        y1 = -2 / (pi * X) + (2 / pi) * lg * j1 - s1 / pi
        return float(j0), float(j1), float(y0), float(y1)


def _hankel(x: np.ndarray, nu: int):
    """Asymptotic P, Q for order nu, summed to the smallest term."""
    mu = 4.0 * nu * nu
    z = 8.0 * x
    P = np.ones_like(x)
    Q = np.zeros_like(x)
    term = np.ones_like(x)
    live = np.ones(x.shape, dtype=bool)
    prev = np.full_like(x, np.inf)
    for k in range(1, 80):
        term = term * (mu - (2 * k - 1) ** 2) / (k * z)
        mag = np.abs(term)
        live &= mag < prev
        prev = mag
        if not live.any():
            break
        add = np.where(live, term, 0.0)
        r = k % 4
        if r == 1:
            Q += add
        elif r == 2:
            P -= add
        elif r == 3:
            Q -= add
        else:
            P += add
    return P, Q


def _asymptotic(x: np.ndarray):
    amp = np.sqrt(2.0 / (np.pi * x))
    out = []
    for nu in (0, 1):
        P, Q = _hankel(x, nu)
        chi = x - (0.5 * nu + 0.25) * np.pi
        c, s = np.cos(chi), np.sin(chi)
        out.append((amp * (P * c - Q * s), amp * (P * s + Q * c)))
    (j0, y0), (j1, y1) = out
    return j0, j1, y0, y1


_SERIES_MAX = 8.0
_DECIMAL_MAX = 17.0


def _bessel_all(x):
    """J0, J1, Y0, Y1 for x > 0 (arrays)."""
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = [np.empty_like(flat) for _ in range(4)]
    small = flat <= _SERIES_MAX
    mid = (flat > _SERIES_MAX) & (flat <= _DECIMAL_MAX)
    big = flat > _DECIMAL_MAX
    if small.any():
        for o, v in zip(out, _series_float(flat[small])):
            o[small] = v
    if mid.any():
        vals = np.array([_series_decimal(float(t)) for t in flat[mid]])
        for i, o in enumerate(out):
            o[mid] = vals[:, i]
    if big.any():
        for o, v in zip(out, _asymptotic(flat[big])):
            o[big] = v
    return [o.reshape(x.shape) for o in out]


def _scalarize(x, arr):
    return float(arr) if np.ndim(x) == 0 else arr


def bessel_j0(x):
    ax = np.abs(np.asarray(x, dtype=float))
    safe = np.where(ax == 0, 1.0, ax)
    j0 = np.where(ax == 0, 1.0, _bessel_all(safe)[0])
    return _scalarize(x, j0)


def bessel_j1(x):
    xa = np.asarray(x, dtype=float)
    ax = np.abs(xa)
    safe = np.where(ax == 0, 1.0, ax)
    j1 = np.where(ax == 0, 0.0, np.sign(xa) * _bessel_all(safe)[1])
    return _scalarize(x, j1)


def _check_positive(x):
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0):
        raise OutOfRange("Y_n is defined for x > 0 only")
    return xa


def bessel_y0(x):
    return _scalarize(x, _bessel_all(_check_positive(x))[2])


def bessel_y1(x):
    return _scalarize(x, _bessel_all(_check_positive(x))[3])


def bessel_derivatives(x):
    """(J1, J1', Y1, Y1') at x > 0, via J1' = J0 - J1/x and Y1' = Y0 - Y1/x."""
    xa = _check_positive(x)
    j0, j1, y0, y1 = _bessel_all(xa)
    return j1, j0 - j1 / xa, y1, y0 - y1 / xa


def bessel_eigenfunction_oracle(A: float, B: float, lam: float, x, derivative: bool = False):
    """u(x) = (A J_{-1}(k x) + B Y_{-1}(k x)) / x with k = sqrt(lam).

    Solves -u'' - (3/x) u' = lam u.  J_{-1} = -J_1 and Y_{-1} = -Y_1.
    """
    if not lam > 0:
        raise InvalidParameter("lambda must be > 0")
    k = math.sqrt(lam)
    xa = np.asarray(x, dtype=float)
    j1, dj1, y1, dy1 = bessel_derivatives(k * xa)
    s = -(A * j1 + B * y1)
    u = s / xa
    if not derivative:
        return _scalarize(x, u)
    du = -k * (A * dj1 + B * dy1) / xa - s / (xa * xa)
    return _scalarize(x, u), _scalarize(x, du)


def bessel_dirichlet_coefficients(lam: float) -> tuple[float, float]:
    """(A, B) for the solution with u(1) = 0, u'(1) = 1."""
    k = math.sqrt(lam)
    j1 = bessel_j1(k)
    y1 = bessel_y1(k)
    return 0.5 * math.pi * y1, -0.5 * math.pi * j1


# ---------------------------------------------------- minimal growth, Green


def _dlog_flux(co, x, rel=1e-3):
    """(ln p)'(x) by the five-point stencil."""
    h = rel * max(1.0, abs(x))
    t = x + h * np.array([-2.0, -1.0, 1.0, 2.0])
    lp = co.log_a(t) + co.log_m(t)
    return float((lp[0] - 8 * lp[1] + 8 * lp[2] - lp[3]) / (12 * h))


def _tail_integral_inv_flux(co, x0):
    """int_{x0}^inf dt / p, or inf when it does not converge."""
    total = 0.0
    lo = x0
    width = max(1.0, abs(x0))
    last = None
    for _ in range(60):
        hi = lo + width

        def g(t):
            t = np.array([t])
            return float(np.exp(-(co.log_a(t) + co.log_m(t)))[0])

        piece, _ = quad(g, lo, hi, limit=200, epsabs=0.0, epsrel=1e-13)
        total += piece
        if piece <= 1e-15 * total:
            return total
        if last is not None and piece >= 0.5 * last and width > 1e6 * max(1.0, abs(x0)):
            return math.inf
        last = piece
        lo = hi
        width *= 2.0
    return math.inf


def decay_rate(spec: OperatorSpec, lam: float, x_far: float, margin: float | None = None) -> float:
    """kappa = -u'/u at x_far for the solution of minimal growth at infinity."""
    co = spec.coefficients
    if co is None:
        raise InvalidParameter("minimal growth needs coefficient callables on the spec")
    span = x_far - spec.x_lo
    x2 = x_far + (margin if margin is not None else span)
    probe = np.linspace(x_far, x2, 257)
    pot = co.V(probe) if co.W is None else co.V(probe) + co.W(probe)
    if np.all(np.abs(pot - lam) < 1e-14):
        tail = _tail_integral_inv_flux(co, x_far)
        if not math.isfinite(tail):
            return 0.0
        return 1.0 / (_flux_at(spec, x_far) * tail)

    def wkb(x):
        t = np.array([x])
        q = (co.V(t) if co.W is None else co.V(t) + co.W(t))[0] - lam
        a = float(np.exp(co.log_a(t))[0])
        return math.sqrt(max(q, 0.0) / a) + 0.5 * _dlog_flux(co, x)

    def rhs(x, k):
        t = np.array([x])
        q = (co.V(t) if co.W is None else co.V(t) + co.W(t))[0] - lam
        a = float(np.exp(co.log_a(t))[0])
        return [-q / a - _dlog_flux(co, x) * k[0] + k[0] * k[0]]

    sol = solve_ivp(rhs, (x2, x_far), [wkb(x2)], method="DOP853", rtol=1e-11, atol=1e-13)
    if not sol.success:
        raise InvalidParameter(f"Riccati integration failed: {sol.message}")
    return float(sol.y[0, -1])


def minimal_growth_solution(spec: OperatorSpec, lam: float, x_far: float, grid: Grid,
                            step: float | None = None, kappa: float | None = None) -> GridFunction:
    """Positive solution of minimal growth at infinity, normalized to 1 at grid.lo."""
    span = grid.hi - grid.lo
    if x_far < grid.hi + 0.2 * span:
        raise InvalidParameter("x_far must exceed the grid edge by >= 20% of the span")
    if kappa is None:
        kappa = decay_rate(spec, lam, x_far)
    if step is None:
        step = min(grid.mesh, (x_far - grid.lo) / 20000.0)
    path = np.concatenate([[x_far], grid.nodes[::-1]])
    u, f, logs = shoot(spec, lam, path, 1.0, -kappa * _flux_at(spec, x_far), step)
    u, f, logs = u[1:][::-1], f[1:][::-1], logs[1:][::-1]
    if np.any(u <= 0):
        raise NonPositive("minimal-growth candidate changes sign: lambda lies above the bottom of the spectrum")
    lu = np.log(u) + logs
    shift = lu[0]
    if np.max(lu - shift) > math.log(_OVERFLOW) or np.min(lu - shift) < -700:
        raise ShootingOverflow("minimal-growth solution leaves the double range on this grid")
    scale = np.exp(logs - shift)
    u = u * scale
    f = f * scale
    p = np.exp(spec.coefficients.log_a(grid.nodes) + spec.coefficients.log_m(grid.nodes))
    return GridFunction(grid, u, f / p)


def _hermite(x, u, du, t):
    i = int(np.clip(np.searchsorted(x, t) - 1, 0, x.size - 2))
    h = x[i + 1] - x[i]
    s = (t - x[i]) / h
    h00 = 2 * s ** 3 - 3 * s ** 2 + 1
    h10 = s ** 3 - 2 * s ** 2 + s
    h01 = -2 * s ** 3 + 3 * s ** 2
    h11 = s ** 3 - s ** 2
    val = h00 * u[i] + h10 * h * du[i] + h01 * u[i + 1] + h11 * h * du[i + 1]
    dval = (
        (6 * s ** 2 - 6 * s) * u[i]
        + (3 * s ** 2 - 4 * s + 1) * h * du[i]
        + (-6 * s ** 2 + 6 * s) * u[i + 1]
        + (3 * s ** 2 - 2 * s) * h * du[i + 1]
    ) / h
    return val, dval


@dataclass(frozen=True, eq=False)
class GreenFunction:
    pole: float
    left_solution: GridFunction
    right_solution: GridFunction
    normalization: float

    def __post_init__(self):
        if not (math.isfinite(self.normalization) and self.normalization > 0):
            raise InvalidParameter("normalization must be finite and positive")

    def _at(self, f: GridFunction, t):
        return _hermite(f.x, f.values, f.grad, t)[0]

    def __call__(self, x):
        """G(x, pole) at points x."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(xs)
        uLp = self._at(self.left_solution, self.pole)
        uRp = self._at(self.right_solution, self.pole)
        for i, t in enumerate(xs):
            if t <= self.pole:
                out[i] = self._at(self.left_solution, t) * uRp
            else:
                out[i] = uLp * self._at(self.right_solution, t)
        out *= self.normalization
        return float(out[0]) if np.ndim(x) == 0 else out


def green_function(spec: OperatorSpec, pole: float, lam: float = 0.0, step: float | None = None,
                   x_far: float | None = None) -> GreenFunction:
    """Minimal Green function G(., pole) of H - lam.

    Left solution: regular at a singular left end, Dirichlet otherwise.
    Right solution: minimal growth at infinity.
    """
    grid = spec.grid
    if not grid.lo < pole < grid.hi:
        raise OutOfRange("pole must lie inside the grid")
    if step is None:
        step = min(grid.mesh, (grid.hi - grid.lo) / 20000.0)
    if spec.singular_lo:
        cfg = ShootingConfig(grid.lo, 1.0, regular_flux(spec, lam) / _flux_at(spec, grid.lo), step)
    else:
        cfg = ShootingConfig(grid.lo, 0.0, 1.0, step)
    left = integrate_ode_sl(spec, lam, cfg, grid)
    if np.any(left.values[1:] <= 0):
        raise NonPositive("left solution changes sign: operator is not nonnegative")
    if x_far is None:
        x_far = grid.hi + 0.5 * (grid.hi - grid.lo)
    right = minimal_growth_solution(spec, lam, x_far, grid, step=step)
    x = grid.nodes
    uL, duL = _hermite(x, left.values, left.grad, pole)
    uR, duR = _hermite(x, right.values, right.grad, pole)
    p = _flux_at(spec, pole)
    # Wronskian with both solutions scaled to 1 at the pole
    w = p * (duR / uR - duL / uL)
    if abs(w) < 1e-10:
        raise CriticalOperator("minimal solutions are proportional: no Green function (critical)")
    norm = 1.0 / (abs(w) * uL * uR)
    return GreenFunction(pole, left, right, norm)
