"""Turning a ScenarioConfig into grids, operators, eigenfunctions and cut-offs.

Grids are built in two passes: a first pass locates the level sets
E = r_n, E = R_n of the Evans potential, the second grid carries those
positions as nodes so that every cut-off kink sits on a node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import registry
from .config import ScenarioConfig, parse_config
from .cutoff import (
    CutoffSequence,
    EvansPotential,
    evans_potential_1d,
    generate_schedule,
    intrinsic_cutoffs,
)
from .errors import InvalidParameter
from .grid import Grid, GridFunction, make_banded_grid, make_graded_grid
from .operator import Coefficients, OperatorSpec, ground_state_transform
from .special import (
    ShootingConfig,
    bessel_dirichlet_coefficients,
    bessel_eigenfunction_oracle,
    integrate_ode_sl,
    minimal_growth_solution,
    regular_flux,
)

BUILTINS = ("r2-parabolic", "bessel-4d", "hyperbolic", "flat-shnol")


def builtin_path(name: str) -> Path:
    if name not in BUILTINS and not name.startswith("hyperbolic"):
        raise InvalidParameter(f"unknown built-in {name!r}; choose from {', '.join(BUILTINS)}")
    return Path(str(resources.files("shnol") / "scenarios" / f"{name}.cfg"))


def load_builtin(name: str) -> ScenarioConfig:
    return parse_config(builtin_path(name))


@dataclass
class Prepared:
    """Everything the pipeline needs for one scenario and one lambda."""

    config: ScenarioConfig
    lam: float
    spec: OperatorSpec
    spec_mu: OperatorSpec
    u: GridFunction
    h: GridFunction
    evans: EvansPotential
    seq: CutoffSequence
    W_sup: float = 0.0
    notes: list = field(default_factory=list)


def coefficients(cfg: ScenarioConfig) -> Coefficients:
    W = None
    if cfg.shift != 0.0:
        W = registry.potential(f"const({cfg.shift!r})", "operator.shift")
    return Coefficients(
        log_m=registry.log_positive(cfg.weight, "operator.weight"),
        log_a=registry.log_positive(cfg.coefficient, "operator.coefficient"),
        V=registry.potential(cfg.potential, "operator.potential"),
        W=W,
    )


def truncated_spec(cfg: ScenarioConfig, X: float, mesh: float | None = None) -> OperatorSpec:
    """The scenario operator on [lo, X], uniform mesh (default: the configured one)."""
    lo, hi = cfg.interval
    if not X > lo:
        raise InvalidParameter(f"truncation {X} must exceed the interval start {lo}")
    if mesh is None:
        mesh = (hi - lo) / cfg.cells
    grid = make_graded_grid(lo, X, max(16, int(round((X - lo) / mesh))))
    return OperatorSpec.build(grid, coefficients(cfg), factor=cfg.factor, singular_lo=cfg.singular_lo)


def _first_grid(cfg: ScenarioConfig, scale: float) -> Grid:
    g = _uniform_or_graded(cfg, scale)
    return g if cfg.base is None else g.with_nodes([cfg.base])


def _uniform_or_graded(cfg: ScenarioConfig, scale: float) -> Grid:
    lo, hi = cfg.interval
    cells = max(16, int(round(cfg.cells / scale)))
    kind = cfg.grading[0]
    if kind == "geometric":
        return make_graded_grid(lo, hi, cells, ("geometric", cfg.grading[1] ** scale))
    if kind == "banded":
        # only used to locate the level sets
        return make_graded_grid(lo, hi, max(cfg.cells, 20000), "uniform")
    return make_graded_grid(lo, hi, cells, "uniform")


def _dlog(fn, x, rel=1e-6):
    x = np.asarray(x, dtype=float)
    d = rel * np.maximum(1.0, np.abs(x))
    return (fn(x + d) - fn(x - d)) / (2 * d)


def _eigenfunction(cfg: ScenarioConfig, spec: OperatorSpec, lam: float, scale: float) -> GridFunction:
    grid = spec.grid
    x = grid.nodes
    kind = cfg.eigenfunction[0]
    if kind == "one":
        return GridFunction(grid, np.ones(x.size), np.zeros(x.size))
    if kind == "cos":
        k = math.sqrt(lam)
        return GridFunction(grid, np.cos(k * x), -k * np.sin(k * x))
    if kind == "bessel-dirichlet":
        A, B = bessel_dirichlet_coefficients(lam)
        u, du = bessel_eigenfunction_oracle(A, B, lam, x, derivative=True)
        return GridFunction(grid, u, du)
    step = min(grid.mesh, 1e-3) * scale
    p_lo = math.exp(float(spec.log_a[0] + spec.log_m[0]))
    if kind == "regular":
        cfg_s = ShootingConfig(grid.lo, 1.0, regular_flux(spec, lam) / p_lo, step)
    else:
        cfg_s = ShootingConfig(grid.lo, cfg.eigenfunction[1], cfg.eigenfunction[2], step)
    return integrate_ode_sl(spec, lam, cfg_s, grid)


def _reference(cfg: ScenarioConfig, spec: OperatorSpec, scale: float):
    """(h, log h callable or None)."""
    grid = spec.grid
    x = grid.nodes
    ref = cfg.reference
    if ref[0] == "one":
        return GridFunction(grid, np.ones(x.size), np.zeros(x.size)), None
    if ref[1] == "supplied":
        lh = registry.log_positive(ref[2], "reference")
        h = np.exp(lh(x))
        return GridFunction(grid, h, h * _dlog(lh, x)), lh
    x_far = grid.hi + 0.25 * (grid.hi - grid.lo)
    h = minimal_growth_solution(spec, 0.0, x_far, grid, step=min(grid.mesh, 1e-2) * scale)
    if cfg.base is not None:
        # the Evans potential is normalized at the base; so is h
        k = int(np.searchsorted(x, cfg.base))
        h = h.scaled(1.0 / h.values[k])
    return h, None


def _evans(cfg: ScenarioConfig, spec: OperatorSpec, h: GridFunction) -> EvansPotential:
    base = cfg.base if cfg.base is not None else spec.grid.lo
    ev = evans_potential_1d(spec, h, base)
    alpha, beta = cfg.evans_affine
    if (alpha, beta) != (1.0, 0.0):
        ev = ev.affine(alpha, beta)
    return ev


def _sequence(cfg: ScenarioConfig, spec: OperatorSpec, spec_mu: OperatorSpec,
              evans: EvansPotential, truncate: bool = False) -> CutoffSequence:
    if cfg.policy[0] == "intrinsic":
        return intrinsic_cutoffs(spec, spec.grid.lo, cfg.policy[1], cfg.n_max)
    return generate_schedule(evans, spec_mu, cfg.n_max, cfg.policy, truncate=truncate)


def _build(cfg, grid, lam, scale, truncate):
    co = coefficients(cfg)
    spec = OperatorSpec.build(grid, co, factor=cfg.factor, singular_lo=cfg.singular_lo)
    h, log_h = _reference(cfg, spec, scale)
    if cfg.reference[0] == "one":
        spec_mu = spec
    else:
        spec_mu = ground_state_transform(spec, h, log_h=log_h, tol=1e-6)
    evans = _evans(cfg, spec, h) if cfg.policy[0] != "intrinsic" else None
    seq = _sequence(cfg, spec, spec_mu, evans, truncate)
    return spec, spec_mu, h, seq


def _levels(seq: CutoffSequence) -> list[float]:
    ev = seq.evans
    pts = []
    for p in seq.pairs:
        for level in (p.r, p.R):
            if level <= ev.max_level:
                pts.append(ev.position_of(level))
    return pts


def prepare(cfg: ScenarioConfig, lam: float | None = None, mesh_scale: float = 1.0,
            truncate: bool = False) -> Prepared:
    """Build a scenario; ``mesh_scale`` = 0.5 halves every mesh width."""
    lam = cfg.lam if lam is None else float(lam)
    if not math.isfinite(lam):
        raise InvalidParameter("lambda must be finite")
    g0 = _first_grid(cfg, mesh_scale)
    _, _, _, seq0 = _build(cfg, g0, lam, mesh_scale, truncate)
    anchors = _levels(seq0)
    if cfg.grading[0] == "banded":
        step, half = cfg.grading[1] * mesh_scale, cfg.grading[2]
        g0 = make_banded_grid(cfg.interval[0], cfg.interval[1], anchors, step, half,
                              coarse_cells=max(16, int(round(cfg.cells / mesh_scale))))
    grid = g0.with_nodes(anchors + ([] if cfg.base is None else [cfg.base]))
    spec, spec_mu, h, seq = _build(cfg, grid, lam, mesh_scale, truncate)
    u = _eigenfunction(cfg, spec, lam, mesh_scale)
    W_sup = abs(cfg.shift)
    notes = []
    if seq.schedule is not None and seq.schedule.truncated:
        notes.append(f"schedule truncated to {seq.n_max} windows by the modeled range")
    return Prepared(cfg, lam, spec, spec_mu, u, h, seq.evans, seq, W_sup, notes)
