"""Evans potentials, the cut-offs psi_{r,R}, schedules, admissibility and capacities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.sparse.linalg import LinearOperator, eigsh

from . import kernels
from .errors import (
    DivergenceTooSlow,
    InvalidParameter,
    NonPositive,
    OutOfRange,
    RangeExhausted,
    ScheduleViolation,
    SupportViolation,
)
from .grid import Grid, GridFunction, MIN_WINDOW_NODES, _check_same, window_mask
from .operator import DiscreteOperator, OperatorSpec, discretize


@dataclass(frozen=True, eq=False)
class EvansPotential:
    """Harmonic exhaustion E with E = 1/2 at ``base_cut``.

    ``flux_const`` is the constant value of (a m h^2) E'; it is 1 for the
    canonical potential and alpha after the reparametrization E -> alpha E + beta.
    ``harmonic`` is False for distance-type exhaustions (intrinsic cut-offs).
    """

    E: GridFunction
    base_cut: float
    symmetric: bool = False
    flux_const: float = 1.0
    harmonic: bool = True

    @property
    def grid(self) -> Grid:
        return self.E.grid

    @property
    def max_level(self) -> float:
        return float(self.E.values[-1])

    @property
    def base_level(self) -> float:
        return float(self.E.values.min())

    def affine(self, alpha: float, beta: float) -> "EvansPotential":
        """The reparametrized potential alpha E + beta (alpha > 0)."""
        if not alpha > 0:
            raise InvalidParameter("affine rescale needs alpha > 0")
        E = self.E
        return EvansPotential(
            GridFunction(E.grid, alpha * E.values + beta, None if E.grad is None else alpha * E.grad),
            self.base_cut, self.symmetric, alpha * self.flux_const, self.harmonic,
        )

    def level_at(self, x: float) -> float:
        """E(x), cubic Hermite between nodes."""
        xs, ev, g = self.grid.nodes, self.E.values, self.E.slope()
        if not xs[0] <= x <= xs[-1]:
            raise OutOfRange(f"{x} lies outside the grid")
        i = int(np.clip(np.searchsorted(xs, x) - 1, 0, xs.size - 2))
        h = xs[i + 1] - xs[i]
        s = (x - xs[i]) / h
        return float(
            (2 * s ** 3 - 3 * s ** 2 + 1) * ev[i]
            + (s ** 3 - 2 * s ** 2 + s) * h * g[i]
            + (-2 * s ** 3 + 3 * s ** 2) * ev[i + 1]
            + (s ** 3 - s ** 2) * h * g[i + 1]
        )

    def position_of(self, level: float) -> float:
        """x with E(x) = level on the increasing branch."""
        ev = self.E.values
        xs = self.grid.nodes
        if level > ev[-1] or level < ev.min():
            raise OutOfRange(f"level {level} outside [{ev.min()}, {ev[-1]}]")
        start = int(np.searchsorted(ev, ev.min(), side="right")) - 1
        i = start + int(np.searchsorted(ev[start:], level)) - 1
        i = int(np.clip(i, start, xs.size - 2))
        lo, hi = xs[i], xs[i + 1]
        # bisection on the Hermite interpolant, exact to rounding
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            if self.level_at(mid) < level:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


@dataclass(frozen=True)
class CutoffPair:
    r: float
    R: float

    def __post_init__(self):
        if not 0.5 < self.r < self.R:
            raise InvalidParameter(f"need 1/2 < r < R, got ({self.r}, {self.R})")


@dataclass(frozen=True, eq=False)
class Cutoff(GridFunction):
    """psi_{r,R} with its level function attached."""

    pair: CutoffPair | None = None
    evans: EvansPotential | None = None


def evans_potential_1d(spec: OperatorSpec, h: GridFunction, base: float,
                       require_range: bool = True) -> EvansPotential:
    """E(x) = 1/2 + int_base^x ds / (a m h^2), constant 1/2 below ``base``.

    ``require_range=False`` accepts a bounded E (capacities only; no schedule fits).

    Cellwise Simpson with a Hermite midpoint value of log h; the exact
    derivative E' = 1/(a m h^2) is attached, so (a m h^2) E' = 1 at every node.
    """
    _check_same(spec.grid, h.grid)
    if np.any(h.values <= 0):
        raise NonPositive("h must be positive")
    x = spec.grid.nodes
    if not x[0] <= base < x[-1]:
        raise OutOfRange("base must lie inside the grid")
    if not np.any(x == base):
        raise InvalidParameter("base must be a grid node (insert it with Grid.with_nodes)")
    lh = np.log(h.values)
    dlh = h.slope() / h.values
    w = np.diff(x)
    lh_mid = 0.5 * (lh[:-1] + lh[1:]) + w * (dlh[:-1] - dlh[1:]) / 8.0
    lp = spec.log_a + spec.log_m
    lp_mid = spec.midpoint_log_flux()
    inv = np.exp(-(lp + 2 * lh))
    inv_mid = np.exp(-(lp_mid + 2 * lh_mid))
    cell = w * (inv[:-1] + 4 * inv_mid + inv[1:]) / 6.0
    k = int(np.searchsorted(x, base))
    E = np.full(x.size, 0.5)
    E[k + 1:] = 0.5 + np.cumsum(cell[k:])
    grad = np.where(np.arange(x.size) >= k, inv, 0.0)
    if require_range and E[-1] < 1.0:
        raise DivergenceTooSlow(
            f"E reaches only {E[-1]:.6g} < 1 on this range; no cut-off pair fits"
        )
    return EvansPotential(GridFunction(spec.grid, E, grad), base)


def evans_from_closed_form(grid: Grid, E_fn, dE_fn, base: float, flux_const: float = 1.0) -> EvansPotential:
    """Evans potential from an analytic E with E(base) = 1/2 (constant below base)."""
    x = grid.nodes
    E = np.where(x >= base, E_fn(np.maximum(x, base)), 0.5)
    g = np.where(x >= base, dE_fn(np.maximum(x, base)), 0.0)
    return EvansPotential(GridFunction(grid, E, g), base, flux_const=flux_const)


def build_psi(evans: EvansPotential, pair: CutoffPair) -> Cutoff:
    """psi = 1 for E < r, (R - E)/(R - r) on [r, R], 0 for E > R."""
    if pair.R > evans.max_level:
        raise OutOfRange(f"R = {pair.R} exceeds the range of E (max {evans.max_level})")
    E = evans.E.values
    width = pair.R - pair.r
    psi = np.clip((pair.R - E) / width, 0.0, 1.0)
    dE = evans.E.slope()
    # level sets are inserted as nodes; allow for the rounding of E there
    slack = 1e-9 * width
    inside = (E[:-1] >= pair.r - slack) & (E[1:] <= pair.R + slack)
    gl = np.where(inside, -dE[:-1] / width, 0.0)
    gr = np.where(inside, -dE[1:] / width, 0.0)
    return Cutoff(evans.grid, psi, None, (gl, gr), pair=pair, evans=evans)


def zero_cutoff(evans: EvansPotential) -> Cutoff:
    n = evans.grid.count
    z = np.zeros(n - 1)
    return Cutoff(evans.grid, np.zeros(n), None, (z, z), pair=None, evans=evans)


def form_energy(spec_mu: OperatorSpec, psi: GridFunction) -> float:
    """a(psi, psi) = int a psi'^2 d mu.

    For cut-offs of a harmonic Evans potential the integral is evaluated in
    the E coordinate, where psi is linear: the energy is
    factor * flux_const * |[r,R] cap range(E)| / (R - r)^2, exact.
    """
    _check_same(spec_mu.grid, psi.grid)
    if isinstance(psi, Cutoff) and psi.pair is None:
        return 0.0
    if isinstance(psi, Cutoff) and psi.evans.harmonic:
        r, R = psi.pair.r, psi.pair.R
        E = psi.evans.E.values
        lo = np.clip(E[:-1], r, R)
        hi = np.clip(E[1:], r, R)
        covered = float(np.sum(hi - lo))
        return spec_mu.factor * psi.evans.flux_const * covered / (R - r) ** 2
    gl, gr = psi.cell_slopes()
    p = spec_mu.flux
    w = spec_mu.grid.widths
    return spec_mu.factor * float(0.5 * np.sum(w * (p[:-1] * gl * gl + p[1:] * gr * gr)))


# ------------------------------------------------------------- schedules


@dataclass(frozen=True)
class ScheduleReport:
    """Which schedule conditions hold, per index (lists aligned with the pairs).

    h1: r_{n+1} > R_n; h2: R_n > r_n; h3: 1/(R_n - r_n) <= 2/R_n;
    h4: cut-off energy below 1/n.
    """

    h1: tuple
    h2: tuple
    h3: tuple
    h4: tuple
    truncated: bool = False

    @property
    def all_hold(self) -> bool:
        return all(self.h1) and all(self.h2) and all(self.h3) and all(self.h4)


@dataclass(frozen=True, eq=False)
class CutoffSequence:
    """Pairs 1..N+1 (index 0 of ``psis`` is psi_0 = 0) and windows A_1..A_N."""

    evans: EvansPotential
    pairs: tuple
    psis: tuple
    annuli: tuple
    reference: GridFunction
    schedule: ScheduleReport | None = None

    @property
    def n_max(self) -> int:
        return len(self.annuli)

    def psi(self, n: int) -> Cutoff:
        return self.psis[n]

    def window(self, n: int) -> tuple[float, float]:
        return self.annuli[n - 1]


def schedule_conditions(pairs, energies) -> ScheduleReport:
    h1, h2, h3, h4 = [], [], [], []
    for i, p in enumerate(pairs):
        n = i + 1
        h1.append(i + 1 >= len(pairs) or pairs[i + 1].r > p.R)
        h2.append(p.R > p.r)
        h3.append(1.0 / (p.R - p.r) <= 2.0 / p.R)
        h4.append(energies[i] < 1.0 / n)
    return ScheduleReport(tuple(h1), tuple(h2), tuple(h3), tuple(h4))


def policy_pairs(policy, count: int) -> list[CutoffPair]:
    """Raw pairs for n = 1..count.

    ``policy`` is ("geometric", base, spread[, r1]) or ("paper-double-exponential",).
    """
    kind = policy[0]
    out = []
    if kind == "geometric":
        base, spread = float(policy[1]), float(policy[2])
        r1 = float(policy[3]) if len(policy) > 3 else 1.0
        if not (base > 1 and spread > 1):
            raise InvalidParameter("geometric policy needs base > 1 and spread > 1")
        for n in range(1, count + 1):
            r = r1 * base ** n
            out.append(CutoffPair(r, spread * r))
    elif kind == "paper-double-exponential":
        for n in range(1, count + 1):
            out.append(CutoffPair(math.exp(2 * n), math.exp(2 * n + 1)))
    elif kind == "explicit":
        out = [CutoffPair(float(r), float(R)) for r, R in policy[1]][:count]
    else:
        raise InvalidParameter(f"unknown schedule policy {kind!r}")
    return out


def _snap(grid: Grid, x: float) -> float:
    """x, or the node it coincides with up to rounding."""
    xs = grid.nodes
    i = int(np.clip(np.searchsorted(xs, x), 1, xs.size - 1))
    j = i - 1 if x - xs[i - 1] < xs[i] - x else i
    return float(xs[j]) if abs(x - xs[j]) <= 1e-9 * (xs[i] - xs[i - 1]) else x


def _windows(evans: EvansPotential, pairs) -> list[tuple[float, float]]:
    """A_n = [E^-1(r_{n-1}), E^-1(R_{n+1})] for n = 1..len(pairs)-1 (r_0: grid start)."""
    out = []
    g = evans.grid
    for i in range(len(pairs) - 1):
        lo = g.lo if i == 0 else _snap(g, evans.position_of(pairs[i - 1].r))
        hi = _snap(g, evans.position_of(pairs[i + 1].R))
        out.append((lo, hi))
    return out


def assemble_sequence(evans: EvansPotential, pairs, reference: GridFunction,
                      schedule: ScheduleReport | None = None) -> CutoffSequence:
    psis = [zero_cutoff(evans)] + [build_psi(evans, p) for p in pairs]
    annuli = _windows(evans, pairs)
    for lo, hi in annuli:
        window_mask(evans.grid, lo, hi, MIN_WINDOW_NODES)
    return CutoffSequence(evans, tuple(pairs), tuple(psis), tuple(annuli), reference, schedule)


def generate_schedule(evans: EvansPotential, spec_mu: OperatorSpec, n_max: int, policy,
                      reference: GridFunction | None = None, strict: bool = True,
                      truncate: bool = False) -> CutoffSequence:
    """Cut-off sequence with n_max windows (n_max + 1 pairs).

    (H1)-(H3) are checked on the policy's pairs; with ``strict`` a violation
    raises ScheduleViolation naming the condition.  (H4) is enforced by
    doubling R_n - r_n until the energy drops below 1/n.
    """
    if n_max < 1:
        raise InvalidParameter("n_max must be >= 1")
    raw = policy_pairs(policy, n_max + 1)
    if strict:
        first = schedule_conditions(raw, [0.0] * len(raw))
        bad = []
        for name in ("h1", "h2", "h3"):
            flags = getattr(first, name)
            if not all(flags):
                bad.append((name.upper(), flags.index(False) + 1))
        if bad:
            text = ", ".join(f"({c}) fails from n = {i}" for c, i in bad)
            raise ScheduleViolation(f"schedule rejected: {text}", bad[0][0], bad[0][1], bad)
    pairs = []
    for i, p in enumerate(raw):
        n = i + 1
        r, R = p.r, p.R
        if pairs and pairs[-1].R != raw[i - 1].R:
            shift = pairs[-1].R / raw[i - 1].R
            r, R = r * shift, R * shift
        while spec_mu.factor * evans.flux_const / (R - r) >= 1.0 / n:
            R = r + 2.0 * (R - r)
        pairs.append(CutoffPair(r, R))
    energies = [spec_mu.factor * evans.flux_const / (p.R - p.r) for p in pairs]
    report = schedule_conditions(pairs, energies)
    top = evans.max_level
    feasible = sum(1 for p in pairs if p.R <= top) - 1
    if feasible < n_max:
        if not truncate or feasible < 1:
            raise RangeExhausted(
                f"E reaches {top:.6g}; only {max(feasible, 0)} windows fit", feasible=max(feasible, 0)
            )
        pairs = pairs[: feasible + 1]
        report = ScheduleReport(
            report.h1[: feasible + 1], report.h2[: feasible + 1],
            report.h3[: feasible + 1], report.h4[: feasible + 1], truncated=True,
        )
    if reference is None:
        reference = GridFunction(evans.grid, np.ones(evans.grid.count), np.zeros(evans.grid.count))
    return assemble_sequence(evans, pairs, reference, report)


# ---------------------------------------------------------- admissibility


@dataclass
class AdmissibilityReport:
    structural: dict
    failures: list
    hardy_constants: list
    hardy_ratio: float
    passed: bool


def structural_checks(seq: CutoffSequence) -> tuple[dict, list]:
    """The four node-wise invariants, exact comparisons."""
    checks = {"bounds": True, "nested": True, "disjoint_gradients": True, "window_one": True}
    failures = []
    psis = seq.psis
    N = len(psis) - 1

    def grad_support(c: Cutoff):
        gl, gr = c.cell_slopes()
        return (gl != 0) | (gr != 0)

    for n in range(1, N + 1):
        v = psis[n].values
        if np.any(v < 0) or np.any(v > 1):
            checks["bounds"] = False
            failures.append(f"n={n}: 0 <= psi <= 1 violated")
        if n < N:
            supp = v > 0
            if np.any(psis[n + 1].values[supp] != 1.0):
                checks["nested"] = False
                failures.append(f"n={n}: psi_(n+1) != 1 on supp psi_n")
        if 1 < n < N:
            if np.any(grad_support(psis[n - 1]) & grad_support(psis[n + 1])):
                checks["disjoint_gradients"] = False
                failures.append(f"n={n}: gradient supports of psi_(n-1), psi_(n+1) overlap")
        if n < N:
            cells = grad_support(psis[n])
            prod = psis[n + 1].values * (1.0 - psis[n - 1].values)
            ends = np.zeros(prod.size, dtype=bool)
            ends[:-1] |= cells
            ends[1:] |= cells
            if np.any(prod[ends] != 1.0):
                checks["window_one"] = False
                failures.append(f"n={n}: psi_(n+1)(1-psi_(n-1)) != 1 on supp grad psi_n")
    return checks, failures


def hardy_weight(spec: OperatorSpec, psi: GridFunction) -> np.ndarray:
    """Nodal a |psi'|^2, averaging the one-sided squares at kinks."""
    gl, gr = psi.cell_slopes()
    sq = np.zeros(psi.grid.count)
    cnt = np.zeros(psi.grid.count)
    sq[:-1] += gl * gl
    sq[1:] += gr * gr
    cnt[:-1] += 1
    cnt[1:] += 1
    return spec.a * sq / cnt


def weak_hardy_constant(spec: OperatorSpec, weight_fn: GridFunction,
                        op: DiscreteOperator | None = None, tol: float = 1e-8) -> float:
    """Best C in int w v^2 dm <= C ||v||_Q^2 over the discrete space.

    Largest eigenvalue of W^{1/2} (S + 1 + c)^{-1} W^{1/2}, by Lanczos with
    tridiagonal solves.
    """
    if op is None:
        op = discretize(spec)
    _check_same(op.grid, weight_fn.grid)
    wv = np.ascontiguousarray(weight_fn.values[op.active])
    if np.any(wv < 0):
        raise InvalidParameter("Hardy weight must be nonnegative")
    if not np.any(wv > 0):
        return 0.0
    sw = np.sqrt(wv)
    d = np.ascontiguousarray(op.diag + 1.0 + op.c)
    o = np.ascontiguousarray(op.offdiag)

    def mv(y):
        y = np.asarray(y, dtype=float).ravel()
        return sw * kernels.tridiag_solve(d, o, np.ascontiguousarray(sw * y))

    n = sw.size
    if n <= 3:
        dense = np.array([mv(e) for e in np.eye(n)])
        return float(np.linalg.eigvalsh(0.5 * (dense + dense.T)).max())
    A = LinearOperator((n, n), matvec=mv, dtype=float)
    v0 = sw / np.linalg.norm(sw)
    val = eigsh(A, k=1, which="LA", tol=tol, v0=v0, return_eigenvectors=False)
    return float(val[0])


def check_admissibility(seq: CutoffSequence, spec: OperatorSpec, hardy: bool = True,
                        op: DiscreteOperator | None = None) -> AdmissibilityReport:
    checks, failures = structural_checks(seq)
    consts = []
    ratio = float("nan")
    ok_hardy = True
    if hardy:
        if op is None:
            op = discretize(spec)
        for n in range(1, seq.n_max + 1):
            w = GridFunction(spec.grid, hardy_weight(spec, seq.psis[n] * _inv_ref(seq)))
            consts.append(weak_hardy_constant(spec, w, op))
        positive = [c for c in consts if c > 0]
        ratio = max(positive) / min(positive) if positive else 1.0
        ok_hardy = ratio <= 10.0
        if not ok_hardy:
            failures.append(f"weak Hardy constants spread by a factor {ratio:.3g} > 10")
    passed = all(checks.values()) and ok_hardy
    return AdmissibilityReport(checks, failures, consts, ratio, passed)


def _inv_ref(seq: CutoffSequence) -> GridFunction:
    """1 as a GridFunction with zero gradient: psi_n = phi_n / phi already."""
    g = seq.evans.grid
    return GridFunction(g, np.ones(g.count), np.zeros(g.count))


@dataclass
class HardyReport:
    ratios: list
    passed: bool
    tolerance: float = 1e-3


def universal_hardy_check(spec_mu: OperatorSpec, evans: EvansPotential, test_family,
                          tol: float = 1e-3) -> HardyReport:
    """Ratios int w^2 a|E'|^2/(4E^2) d mu / int a|w'|^2 d mu per test function."""
    x = spec_mu.grid.nodes
    base_zone = x <= evans.base_cut
    E = evans.E.values
    dE = evans.E.slope()
    p = spec_mu.flux
    wts = spec_mu.grid.widths
    ratios = []
    for w in test_family:
        _check_same(spec_mu.grid, w.grid)
        if np.any(w.values[base_zone] != 0):
            raise SupportViolation("test function touches the base region")
        lhs_int = p * dE ** 2 / (4 * E ** 2) * w.values ** 2
        lhs = 0.5 * np.sum(wts * (lhs_int[:-1] + lhs_int[1:]))
        gl, gr = w.cell_slopes()
        rhs = 0.5 * np.sum(wts * (p[:-1] * gl ** 2 + p[1:] * gr ** 2))
        ratios.append(float(lhs / rhs) if rhs > 0 else math.inf)
    return HardyReport(ratios, all(r <= 1 + tol for r in ratios), tol)


# ------------------------------------------------------- capacity, metric


def capacity(spec_mu: OperatorSpec, evans: EvansPotential, pair: CutoffPair | tuple,
             coords: str = "x") -> float:
    """Cap(closure of {E < r}, {E < R}) = a(psi_{r,R}, psi_{r,R}).

    With coords="x" the pair holds positions and is mapped through E first.
    """
    if coords == "x":
        lo, hi = pair if isinstance(pair, tuple) else (pair.r, pair.R)
        xs = evans.grid.nodes
        if not (xs[0] <= lo < hi <= xs[-1]):
            raise OutOfRange(f"pair ({lo}, {hi}) outside the grid")
        r, R = evans.level_at(lo), evans.level_at(hi)
    else:
        r, R = (pair if isinstance(pair, tuple) else (pair.r, pair.R))
    if R > evans.max_level:
        raise OutOfRange(f"R = {R} exceeds the range of E")
    if not evans.harmonic:
        return form_energy(spec_mu, build_psi(evans, CutoffPair(r, R)))
    return spec_mu.factor * evans.flux_const / (R - r)


@dataclass
class CriticalityVerdict:
    status: str
    capacities: list
    floor: float


def criticality_test(spec_mu: OperatorSpec, evans: EvansPotential, r: float, R_list,
                     threshold: float = 1e-3, coords: str = "x") -> CriticalityVerdict:
    caps = [capacity(spec_mu, evans, (r, R), coords) for R in R_list]
    decreasing = all(b <= a * (1 + 1e-12) for a, b in zip(caps, caps[1:]))
    if decreasing and caps[-1] < threshold:
        return CriticalityVerdict("CRITICAL", caps, caps[-1])
    if len(caps) >= 2 and caps[-1] >= threshold:
        rel = abs(caps[-1] - caps[-2]) / caps[-1]
        if rel < 0.01:
            return CriticalityVerdict("SUBCRITICAL", caps, caps[-1])
    return CriticalityVerdict("INCONCLUSIVE", caps, caps[-1])


def intrinsic_distance(spec: OperatorSpec, x: float, y: float) -> float:
    """d_A(x, y) = |int_x^y dt / sqrt(a)|."""
    lo, hi = min(x, y), max(x, y)
    co = spec.coefficients
    if co is not None:
        val, _ = quad(lambda t: float(np.exp(-0.5 * co.log_a(np.array([t]))[0])), lo, hi, limit=200)
        return val
    xs = spec.grid.nodes
    if lo < xs[0] or hi > xs[-1]:
        raise OutOfRange("points outside the grid")
    ia = np.exp(-0.5 * spec.log_a)
    fine = np.unique(np.concatenate([[lo, hi], xs[(xs > lo) & (xs < hi)]]))
    vals = np.interp(fine, xs, ia)
    return float(0.5 * np.sum(np.diff(fine) * (vals[:-1] + vals[1:])))


def intrinsic_exhaustion(spec: OperatorSpec, p: float) -> EvansPotential:
    """E = max(d_A(p, x), 1/2): the distance exhaustion behind intrinsic cut-offs."""
    x = spec.grid.nodes
    ia = np.exp(-0.5 * spec.log_a)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(x) * (ia[:-1] + ia[1:]))])
    d_p = np.interp(p, x, cum)
    d = np.abs(cum - d_p)
    E = np.maximum(d, 0.5)
    g = np.where(d > 0.5, np.sign(x - p) * ia, 0.0)
    base = float(np.interp(d_p + 0.5, cum, x))
    return EvansPotential(GridFunction(spec.grid, E, g), base, harmonic=False)


def intrinsic_cutoffs(spec: OperatorSpec, p: float, b: float, n_max: int,
                      reference: GridFunction | None = None) -> CutoffSequence:
    """Pairs (n, n+b) of the distance exhaustion, n = 1..n_max+1."""
    if not 0 < b < 1:
        raise InvalidParameter("b must lie in (0, 1)")
    ev = intrinsic_exhaustion(spec, p)
    if n_max + 1 + b > ev.max_level:
        raise RangeExhausted(
            f"distance reaches {ev.max_level:.6g}; need {n_max + 1 + b}",
            feasible=max(int(ev.max_level - b) - 1, 0),
        )
    pairs = [CutoffPair(float(n), n + b) for n in range(1, n_max + 2)]
    if reference is None:
        reference = GridFunction(spec.grid, np.ones(spec.grid.count), np.zeros(spec.grid.count))
    return assemble_sequence(ev, pairs, reference)
