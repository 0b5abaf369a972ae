"""Shnol diagnostics: the growth conditions, the Weyl residuals and the verdicts.

All integrals over exponentially weighted measures are accumulated in the
log domain; ratios are formed from logarithms and only exponentiated at the
end (so 0 and inf are legitimate outputs, their logs stay finite).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__, kernels
from .cutoff import CutoffSequence, check_admissibility, form_energy
from .errors import IdentityViolation, InvalidParameter, ShnolError, TooShort
from .grid import (
    GridFunction,
    LogQuantity,
    MIN_WINDOW_NODES,
    _signed_logsumexp,
    log_sum,
    window_mask,
)
from .operator import (
    OperatorSpec,
    discretize,
    eigenvalues_near,
    weyl_residual_dual_norm,
)

IDENTITY_TOL = 1e-6
PASS_RATE = -0.1
POWER_RATE = -0.4


@dataclass
class ShnolRecord:
    n: int
    r_n: float
    R_n: float
    energy_a: float
    norm_phi_u: LogQuantity
    max_ratio_An: float
    l2_u_An: LogQuantity
    grad_terms: float
    cond_i: float
    cond_ii: float
    gen_weyl: float
    residual: float
    log_cond_i: float = math.nan
    log_cond_ii: float = math.nan
    log_gen_weyl: float = math.nan
    identity_error: float = math.nan
    harnack_ratio: float = math.nan


@dataclass
class Verdict:
    condition: str
    trend: str
    passed: bool
    note: str = ""
    rate: float | None = None

    @property
    def label(self) -> str:
        return "PASS" if self.passed else "FAIL"


@dataclass
class SubexpReport:
    rho: float
    tail_ratio_min: float
    subexponential: bool
    tail_ratios: list


@dataclass
class CaccioppoliReport:
    kind: str
    constants: list
    sup: float
    passed: bool


@dataclass
class ShnolReport:
    name: str
    lam: float
    records: list
    verdicts: dict
    admissibility: object = None
    subexp: SubexpReport | None = None
    oracle_distance: float = math.nan
    oracle_resolution: float = math.nan
    bp_constant: float = math.nan
    caccioppoli: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)


# ------------------------------------------------------------ log helpers


def _lg(v):
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore"):
        return (v != 0).astype(int) * np.sign(v).astype(int), np.log(np.abs(v))



def _lexp(x: float) -> float:
    if x > 709.7:
        return math.inf
    return math.exp(x)


class _Frame:
    """Cellwise Simpson quadrature in the log domain.

    Functions enter as triples (left end, midpoint, right end) per cell.
    Midpoint values come from the cubic Hermite interpolant built on the
    one-sided cell slopes, so cut-off kinks at nodes cost nothing.
    """

    def __init__(self, spec: OperatorSpec):
        self.spec = spec
        x = spec.grid.nodes
        self.w = spec.grid.widths
        self.log_w6 = np.log(self.w / 6.0)
        self.log_f = math.log(spec.factor)
        co = spec.coefficients
        lm, lp = spec.log_m, spec.log_a + spec.log_m
        pot = spec.potential
        if co is not None:
            mid = 0.5 * (x[:-1] + x[1:])
            lm_mid = co.log_m(mid)
            pot_mid = co.V(mid) if co.W is None else co.V(mid) + co.W(mid)
        else:
            lm_mid = np.logaddexp(lm[:-1], lm[1:]) - math.log(2.0)
            pot_mid = 0.5 * (pot[:-1] + pot[1:])
        self.log_weight = {
            "m": (lm[:-1], lm_mid, lm[1:]),
            "p": (lp[:-1], spec.midpoint_log_flux(), lp[1:]),
        }
        self.pot = (pot[:-1], pot_mid, pot[1:])
        self.has_pot = bool(np.any(pot != 0) or np.any(pot_mid != 0))

    def val(self, f: GridFunction):
        v = f.values
        gl, gr = f.cell_slopes()
        return v[:-1], 0.5 * (v[:-1] + v[1:]) + self.w * (gl - gr) / 8.0, v[1:]

    def der(self, f: GridFunction):
        v = f.values
        gl, gr = f.cell_slopes()
        return gl, 1.5 * (v[1:] - v[:-1]) / self.w - 0.25 * (gl + gr), gr

    @staticmethod
    def mul(*pieces):
        out = pieces[0]
        for p in pieces[1:]:
            out = tuple(a * b for a, b in zip(out, p))
        return out

    @staticmethod
    def add(a, b):
        return tuple(x + y for x, y in zip(a, b))

    def sq_int(self, piece, weight: str = "m", coef=None, cells=None) -> LogQuantity:
        """factor * int piece^2 [coef] e^{log weight} dx, Simpson per cell."""
        signs, logs = [], []
        for k, (f, lw) in enumerate(zip(piece, self.log_weight[weight])):
            s, l = _lg(f)
            s, l = s * s, 2 * l + lw + self.log_w6
            if k == 1:
                l = l + math.log(4.0)
            if coef is not None:
                sc, lc = _lg(coef[k])
                s, l = s * sc, l + lc
            if cells is not None:
                s, l = s[cells], l[cells]
            signs.append(s)
            logs.append(l)
        q = _signed_logsumexp(np.concatenate(signs), np.concatenate(logs))
        return LogQuantity(q.sign, q.log_magnitude + self.log_f) if q.sign else q


def _scale(q: LogQuantity, log_c: float, sign: int = 1) -> LogQuantity:
    if q.sign == 0:
        return q
    return LogQuantity(q.sign * sign, q.log_magnitude + log_c)


# -------------------------------------------------------------- measurement


def divide(u: GridFunction, phi: GridFunction) -> GridFunction:
    """u / phi with the quotient rule on exact gradients."""
    ul, ur = u.cell_slopes()
    pl, pr = phi.cell_slopes()
    uv, pv = u.values, phi.values
    q = uv / pv
    gl = ul / pv[:-1] - uv[:-1] * pl / pv[:-1] ** 2
    gr = ur / pv[1:] - uv[1:] * pr / pv[1:] ** 2
    return GridFunction(u.grid, q, None, (gl, gr))


def measure(spec: OperatorSpec, spec_mu: OperatorSpec, seq: CutoffSequence, u: GridFunction,
            reference: GridFunction, lam: float, residuals: bool = True,
            op=None) -> list[ShnolRecord]:
    """All per-index quantities of the two growth conditions and the Weyl checks."""
    fr = _Frame(spec)
    if residuals and op is None:
        try:
            op = discretize(spec)
        except (ShnolError, FloatingPointError, ValueError):
            op = None
    ratio = np.abs(u.values / reference.values)
    uv, du = fr.val(u), fr.der(u)
    grads = [fr.sq_int(fr.mul(uv, fr.der(p)), "p") for p in seq.psis]
    none = LogQuantity(0, -math.inf)
    records = []
    for n in range(1, seq.n_max + 1):
        psi = seq.psis[n]
        lo, hi = seq.window(n)
        mask = window_mask(spec.grid, lo, hi, MIN_WINDOW_NODES)
        pv, pd = fr.val(psi), fr.der(psi)
        wv = fr.mul(pv, uv)
        N = fr.sq_int(wv)
        log_norm = 0.5 * N.log_magnitude
        energy = form_energy(spec_mu, psi)
        max_ratio = float(ratio[mask].max())
        log_ci = math.log(max_ratio) + 0.5 * math.log(energy) - log_norm if max_ratio > 0 else -math.inf
        l2 = fr.sq_int(uv, cells=mask[:-1] & mask[1:]).sqrt()
        G = log_sum([grads[n - 1], grads[n], grads[n + 1]])
        num = log_sum([l2, G.sqrt()])
        log_cii = num.log_magnitude - log_norm
        Gn = grads[n]
        log_gw = Gn.log_magnitude - N.log_magnitude
        # integration by parts: Q(w,w) - lam ||w||^2 = int u^2 a psi'^2 dm
        kin = fr.sq_int(fr.add(fr.mul(pd, uv), fr.mul(pv, du)), "p")
        potv = fr.sq_int(wv, coef=fr.pot) if fr.has_pot else none
        lamN = _scale(N, math.log(abs(lam)), -int(np.sign(lam))) if lam != 0 else none
        err = log_sum([kin, potv, lamN, _scale(Gn, 0.0, -1)])
        big = max(t.log_magnitude for t in (kin, potv, lamN, Gn))
        ident = 0.0 if err.sign == 0 else _lexp(err.log_magnitude - big)
        w_fn = psi * u
        res = math.nan
        if op is not None:
            try:
                res = weyl_residual_dual_norm(spec, w_fn, lam, op)
            except (ShnolError, ValueError, ZeroDivisionError):
                res = math.nan
        win = u.values[mask]
        same_sign = np.all(win > 0) or np.all(win < 0)
        harn = float(np.abs(win).max() / np.abs(win).min()) if same_sign else math.inf
        records.append(
            ShnolRecord(
                n=n,
                r_n=psi.pair.r,
                R_n=psi.pair.R,
                energy_a=energy,
                norm_phi_u=LogQuantity(1, log_norm) if N.sign else N,
                max_ratio_An=max_ratio,
                l2_u_An=l2,
                grad_terms=G.to_float(),
                cond_i=_lexp(log_ci),
                cond_ii=_lexp(log_cii),
                gen_weyl=_lexp(log_gw),
                residual=res,
                log_cond_i=log_ci,
                log_cond_ii=log_cii,
                log_gen_weyl=log_gw,
                identity_error=ident,
                harnack_ratio=harn,
            )
        )
    return records


def condition_i_series(spec, spec_mu, seq, u, reference, lam=0.0):
    return measure(spec, spec_mu, seq, u, reference, lam, residuals=False)


def condition_ii_series(spec, seq, u, lam=0.0):
    ref = seq.reference
    if not np.all(ref.values == ref.values[0]):
        raise InvalidParameter("condition (ii) needs a constant reference")
    return measure(spec, spec, seq, u, ref, lam, residuals=False)


def gen_weyl_ratio(spec, seq, u, lam, tol: float = IDENTITY_TOL) -> list[float]:
    """Ratios int u^2 a psi_n'^2 dm / ||psi_n u||^2; checks the integration-by-parts identity."""
    recs = measure(spec, spec, seq, u, seq.reference, lam, residuals=False)
    for r in recs:
        if not r.identity_error <= tol:
            raise IdentityViolation(
                f"n={r.n}: |Q(w,w) - lam||w||^2 - int u^2 a psi'^2 dm| = {r.identity_error:.3g} x max term"
            )
    return [r.gen_weyl for r in recs]


# ------------------------------------------------------------------ trends


def fit_trend(ns, logs) -> tuple[float, float]:
    """(slope of log value vs n, slope of log value vs log n) over the given points."""
    ns = np.asarray(ns, dtype=float)
    ys = np.asarray(logs, dtype=float)
    ok = np.isfinite(ys)
    ns, ys = ns[ok], ys[ok]
    if ns.size < 2:
        return math.nan, math.nan
    s_exp = float(np.polyfit(ns, ys, 1)[0])
    s_pow = float(np.polyfit(np.log(ns), ys, 1)[0])
    return s_exp, s_pow


def tail(ns):
    k = len(ns)
    return slice(k // 2, k) if k >= 4 else slice(0, k)


def classify(condition: str, ns, logs) -> Verdict:
    """Decaying, bounded or growing from log-linear and log-log fits of the tail half."""
    sl = tail(ns)
    ns_t, logs_t = list(ns)[sl], list(logs)[sl]
    if len(ns_t) and all(v == -math.inf for v in logs_t):
        return Verdict(condition, "decaying", True, "identically zero on the tail", -math.inf)
    s_exp, s_pow = fit_trend(ns_t, logs_t)
    if math.isnan(s_exp):
        return Verdict(condition, "bounded", False, "too few finite values to fit")
    if s_exp < PASS_RATE:
        return Verdict(condition, "decaying", True, f"log-slope {s_exp:.4g} per index", s_exp)
    if s_pow <= POWER_RATE:
        return Verdict(condition, "decaying", True, f"power-law exponent {s_pow:.4g}", s_pow)
    if s_exp > -PASS_RATE:
        return Verdict(condition, "growing", False, f"log-slope {s_exp:.4g} per index")
    return Verdict(condition, "bounded", False, f"log-slope {s_exp:.4g}, exponent {s_pow:.4g}")


# ------------------------------------------------------ auxiliary checks


def _bump(grid, lo, hi):
    x = grid.nodes
    t = np.clip((x - lo) / (hi - lo), 0.0, 1.0)
    v = np.where((x > lo) & (x < hi), np.sin(np.pi * t) ** 2, 0.0)
    g = np.where((x > lo) & (x < hi), np.pi / (hi - lo) * np.sin(2 * np.pi * t), 0.0)
    return GridFunction(grid, v, g)


def caccioppoli_pointwise_check(spec_mu: OperatorSpec, seq: CutoffSequence, u: GridFunction,
                                lam: float, W: float = 0.0, test_family=None) -> CaccioppoliReport:
    """C_emp(n) = int |psi_{n+1}(1-psi_{n-1})|^2 v^2 a u'^2 dmu / ((2+sqrt(|lam|+|W|))^2 max_{A_n} u^2).

    Each test v is divided by its Q-norm; the default family is one sin^2
    bump spanning A_n.  Evaluated in the log domain.
    """
    fr = _Frame(spec_mu)
    log_k = 2.0 * math.log(2.0 + math.sqrt(abs(lam) + abs(W)))
    du = fr.der(u)
    one = tuple(np.ones_like(t) for t in du)
    consts = []
    for n in range(1, seq.n_max + 1):
        lo, hi = seq.window(n)
        mask = window_mask(spec_mu.grid, lo, hi)
        top = float(np.max(np.abs(u.values[mask])))
        cut = fr.mul(fr.val(seq.psis[n + 1]), fr.add(one, tuple(-t for t in fr.val(seq.psis[n - 1]))))
        tests = test_family(n) if test_family is not None else [_bump(spec_mu.grid, lo, hi)]
        best = 0.0
        for v in tests:
            vv, vd = fr.val(v), fr.der(v)
            lhs = fr.sq_int(fr.mul(cut, vv, du), "p")
            if lhs.sign == 0:
                continue
            parts = [fr.sq_int(vd, "p"), _scale(fr.sq_int(vv), math.log(1.0 + spec_mu.c))]
            if fr.has_pot:
                parts.append(fr.sq_int(vv, coef=fr.pot))
            q2 = log_sum(parts)
            if q2.sign <= 0 or top == 0:
                best = math.inf
                continue
            c = _lexp(lhs.log_magnitude - q2.log_magnitude - log_k - 2.0 * math.log(top))
            best = max(best, c)
        consts.append(best)
    fin = [c for c in consts if math.isfinite(c)]
    sup = max(fin) if fin else math.nan
    return CaccioppoliReport("pointwise", consts, sup, len(fin) == len(consts))


def caccioppoli_l2_check(spec_mu: OperatorSpec, seq: CutoffSequence, u: GridFunction,
                         lam: float, W: float = 0.0) -> CaccioppoliReport:
    """int |psi_{n+1}(1-psi_{n-1})|^2 a u'^2 dmu over
    ||u||_{L2(A_n, mu)} + (int u^2 a psi_{n-1}'^2 dmu + int u^2 a psi_{n+1}'^2 dmu)^{1/2}."""
    fr = _Frame(spec_mu)
    uv, du = fr.val(u), fr.der(u)
    consts = []
    for n in range(1, seq.n_max + 1):
        lo, hi = seq.window(n)
        mask = window_mask(spec_mu.grid, lo, hi)
        one = tuple(np.ones_like(t) for t in uv)
        cut = fr.mul(fr.val(seq.psis[n + 1]), fr.add(one, tuple(-t for t in fr.val(seq.psis[n - 1]))))
        lhs = fr.sq_int(fr.mul(cut, du), "p")
        l2 = fr.sq_int(uv, cells=mask[:-1] & mask[1:]).sqrt()
        g = log_sum([fr.sq_int(fr.mul(uv, fr.der(seq.psis[k])), "p") for k in (n - 1, n + 1)]).sqrt()
        rhs = log_sum([l2, g])
        if lhs.sign == 0:
            consts.append(0.0)
        elif rhs.sign == 0:
            consts.append(math.inf)
        else:
            consts.append(_lexp(lhs.log_magnitude - rhs.log_magnitude))
    fin = [c for c in consts if math.isfinite(c)]
    sup = max(fin) if fin else math.nan
    return CaccioppoliReport("l2", consts, sup, len(fin) == len(consts))


def harnack_equivalence(records: list[ShnolRecord]) -> Verdict:
    """Harnack ratios on the A_n and co-occurrence of small residuals and small gen_weyl."""
    ratios = [r.harnack_ratio for r in records]
    ns = [r.n for r in records]
    gw = classify("gen-weyl-necessary", ns, [r.log_gen_weyl for r in records])
    if not all(math.isfinite(h) for h in ratios):
        return Verdict("harnack-equivalence", gw.trend, False, "INAPPLICABLE: u vanishes or changes sign on some A_n")
    logs_res = [math.log(r.residual) if r.residual > 0 else -math.inf for r in records]
    if not any(math.isfinite(v) for v in logs_res):
        return Verdict(
            "harnack-equivalence", gw.trend, gw.passed,
            f"Harnack ratios max {max(ratios):.4g}; residual unavailable",
        )
    rs = classify("residual", ns, logs_res)
    agree = (rs.trend == "decaying") == (gw.trend == "decaying")
    return Verdict(
        "harnack-equivalence", gw.trend, agree,
        f"Harnack ratios max {max(ratios):.4g}; residual {rs.trend}, gen_weyl {gw.trend}",
    )


def subexponential_diagnostic(J) -> SubexpReport:
    """rho = max over the tail half of log J(n)/n; tail min of J(n+3)/J(n-1).

    J is indexed from n = 1.
    """
    J = np.asarray(J, dtype=float)
    if J.size < 8:
        raise TooShort(f"need at least 8 values, got {J.size}")
    if np.any(~np.isfinite(J)) or np.any(J <= 0):
        raise InvalidParameter("J must be finite and positive")
    n = np.arange(1, J.size + 1)
    start = J.size // 2
    rho = float(np.max(np.log(J[start:]) / n[start:]))
    idx = [k for k in range(start, J.size) if k + 3 < J.size and k - 1 >= 0]
    ratios = [float(J[k + 3] / J[k - 1]) for k in idx]
    return SubexpReport(rho, min(ratios) if ratios else math.nan, rho <= 0.05, ratios)


def subexponential_from_logs(logJ) -> SubexpReport:
    """Same diagnostic for sequences given by their logarithms."""
    L = np.asarray(logJ, dtype=float)
    if L.size < 8:
        raise TooShort(f"need at least 8 values, got {L.size}")
    n = np.arange(1, L.size + 1)
    start = L.size // 2
    rho = float(np.max(L[start:] / n[start:]))
    idx = [k for k in range(start, L.size) if k + 3 < L.size and k - 1 >= 0]
    ratios = [_lexp(L[k + 3] - L[k - 1]) for k in idx]
    return SubexpReport(rho, min(ratios) if ratios else math.nan, rho <= 0.05, ratios)


# ----------------------------------------------------------------- verdicts


def verdicts_for(records: list[ShnolRecord], reference_constant: bool) -> dict:
    ns = [r.n for r in records]
    out = {
        "i": classify("i", ns, [r.log_cond_i for r in records]),
        "gen-weyl-necessary": classify("gen-weyl-necessary", ns, [r.log_gen_weyl for r in records]),
        "harnack-equivalence": harnack_equivalence(records),
    }
    v2 = classify("ii", ns, [r.log_cond_ii for r in records])
    if not reference_constant:
        v2 = Verdict("ii", v2.trend, False, "not applicable: reference is not constant", v2.rate)
    out["ii"] = v2
    return out


# ----------------------------------------------------------------- pipeline


def oracle_proximity(spec: OperatorSpec, lam: float, op=None) -> tuple[float, float]:
    """(distance from lam to the discrete spectrum, resolution bound).

    The resolution bound is half the gap between the two discrete
    eigenvalues bracketing lam: no discretization of this size can place an
    eigenvalue closer than that with certainty.
    """
    if op is None:
        op = discretize(spec)
    ev = eigenvalues_near(op, lam, width=1)
    dist = float(np.min(np.abs(ev - lam)))
    if ev.size >= 2:
        below, above = ev[ev <= lam], ev[ev > lam]
        if below.size and above.size:
            return dist, 0.5 * float(above.min() - below.max())
        return dist, float(np.min(np.abs(np.diff(ev))))
    return dist, math.nan


def growth_constant(u: GridFunction, h: GridFunction) -> float:
    """Empirical C in |u| <= C h on the sampled grid."""
    return float(np.max(np.abs(u.values) / h.values))


def run_pipeline(prepared, hardy: bool = True, caccioppoli: bool = True) -> ShnolReport:
    """All diagnostics for one prepared scenario (see ``scenarios.prepare``)."""
    P = prepared
    spec, spec_mu, seq, u, h = P.spec, P.spec_mu, P.seq, P.u, P.h
    notes = list(P.notes)
    try:
        op = discretize(spec)
    except ShnolError as exc:
        op = None
        notes.append(f"no discrete oracle: {exc}")
    records = measure(spec, spec_mu, seq, u, h, P.lam, residuals=op is not None, op=op)
    bad = [r.n for r in records if not r.identity_error <= IDENTITY_TOL]
    if bad:
        raise IdentityViolation(f"integration-by-parts identity fails at n = {bad}")
    constant_ref = bool(np.all(h.values == h.values[0]))
    verdicts = verdicts_for(records, constant_ref)

    adm = None
    try:
        op_mu = discretize(spec_mu) if hardy else None
        adm = check_admissibility(seq, spec_mu, hardy=hardy, op=op_mu)
    except ShnolError as exc:
        adm = check_admissibility(seq, spec_mu, hardy=False)
        notes.append(f"weak Hardy constants unavailable: {exc}")

    subexp = None
    try:
        subexp = subexponential_from_logs([r.norm_phi_u.log_magnitude for r in records])
    except TooShort as exc:
        notes.append(f"subexponential diagnostic skipped: {exc}")

    dist = res = math.nan
    if op is not None:
        dist, res = oracle_proximity(spec, P.lam, op)
        for v in verdicts.values():
            if v.condition in ("i", "ii") and v.passed and not dist <= res:
                notes.append(
                    f"condition ({v.condition}) passes but lambda lies {dist:.3g} from the "
                    f"discrete spectrum (resolution {res:.3g})"
                )

    cacc = []
    if caccioppoli:
        v = u if constant_ref else divide(u, h)
        cacc.append(caccioppoli_l2_check(spec_mu, seq, v, P.lam, P.W_sup))
        cacc.append(caccioppoli_pointwise_check(spec_mu, seq, v, P.lam, P.W_sup))

    cfg = P.config
    prov = {
        "config": dict(cfg.raw),
        "source": cfg.source,
        "lambda": P.lam,
        "nodes": spec.grid.count,
        "mesh": spec.grid.mesh,
        "backend": kernels.BACKEND,
        "version": __version__,
        "numpy": np.__version__,
    }
    return ShnolReport(
        name=cfg.name, lam=P.lam, records=records, verdicts=verdicts, admissibility=adm,
        subexp=subexp, oracle_distance=dist, oracle_resolution=res,
        bp_constant=growth_constant(u, h), caccioppoli=cacc, notes=notes, provenance=prov,
    )


def _max_rel(a: list[ShnolRecord], b: list[ShnolRecord], fields) -> float:
    worst = 0.0
    for x, y in zip(a, b):
        for f in fields:
            u, v = getattr(x, f), getattr(y, f)
            if u == v:
                continue
            if not (math.isfinite(u) and math.isfinite(v)):
                return math.inf
            worst = max(worst, abs(u - v) / max(abs(u), abs(v)))
    return worst


INVARIANT_FIELDS = ("log_cond_i", "log_cond_ii", "log_gen_weyl", "cond_i", "cond_ii", "gen_weyl",
                    "harnack_ratio", "energy_a")


def invariant_suite(prepared, scale: float = -3.7, affine=(3.0, 1.25)) -> dict:
    """name -> (measured value, tolerance, passed) for the exact invariants."""
    from .cutoff import CutoffPair, assemble_sequence, structural_checks

    P = prepared
    out = {}
    base = measure(P.spec, P.spec_mu, P.seq, P.u, P.h, P.lam, residuals=False)
    ident = max(r.identity_error for r in base)
    out["integration-by-parts"] = (ident, IDENTITY_TOL, ident <= IDENTITY_TOL)
    scaled = measure(P.spec, P.spec_mu, P.seq, P.u.scaled(scale), P.h, P.lam, residuals=False)
    d = _max_rel(base, scaled, INVARIANT_FIELDS)
    out["u-scaling"] = (d, 1e-12, d <= 1e-12)
    if P.seq.evans.harmonic:
        al, be = affine
        ev2 = P.seq.evans.affine(al, be)
        pairs2 = [CutoffPair(al * p.r + be, al * p.R + be) for p in P.seq.pairs]
        seq2 = assemble_sequence(ev2, pairs2, P.seq.reference, P.seq.schedule)
        moved = measure(P.spec, P.spec_mu, seq2, P.u, P.h, P.lam, residuals=False)
        d = _max_rel(base, moved, INVARIANT_FIELDS)
        out["affine-evans"] = (d, 1e-12, d <= 1e-12)
    checks, _ = structural_checks(P.seq)
    ok = all(checks.values())
    out["structural"] = (0.0 if ok else 1.0, 0.0, ok)
    return out
