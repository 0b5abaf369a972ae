"""Command-line entry points.

Exit codes: 0 success, 1 scenario failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np


from . import __version__, pipeline, report, scenarios
from .config import ScenarioConfig, parse_config
from .cutoff import check_admissibility, criticality_test, evans_potential_1d
from .errors import ConfigError, ShnolError
from .grid import GridFunction, make_graded_grid
from .operator import OperatorSpec, discretize, distance_to_spectrum, eigenvalues_tridiagonal

DEFAULT_OUT = "shnol-out"


def _load(target: str) -> ScenarioConfig:
    p = Path(target)
    if not p.exists() and (target in scenarios.BUILTINS or target.startswith("hyperbolic")):
        return scenarios.load_builtin(target)
    return parse_config(p)


def _configs(target: str) -> list[ScenarioConfig]:
    p = Path(target)
    if p.is_dir():
        files = sorted(p.glob("*.cfg"))
        if not files:
            raise ConfigError([f"{p}: no .cfg files"])
        return [parse_config(f) for f in files]
    return [_load(target)]


def _out_root(arg: str | None) -> Path:
    return Path(arg or os.environ.get("SHNOL_OUT") or DEFAULT_OUT)


def _lambdas(cfg: ScenarioConfig, override: float | None) -> tuple:
    if override is None:
        return cfg.lambdas
    if not math.isfinite(override):
        raise ConfigError(["--lambda must be finite"])
    return (override,)


def run_one(cfg: ScenarioConfig, lam: float, mesh_halve: bool = False) -> report.ReportBundle:
    rep = pipeline.run_pipeline(scenarios.prepare(cfg, lam))
    fine = None
    if mesh_halve:
        fine = pipeline.run_pipeline(scenarios.prepare(cfg, lam, mesh_scale=0.5), hardy=False)
    return report.bundle(rep, fine)


def cmd_run(args) -> int:
    root = _out_root(args.out)
    for cfg in _configs(args.config):
        lams = _lambdas(cfg, args.lam)
        outdir = root / cfg.outputs
        outdir.mkdir(parents=True, exist_ok=True)
        for k, lam in enumerate(lams):
            b = run_one(cfg, lam, args.mesh_halve)
            stem = "report" if len(lams) == 1 else f"report_{k}"
            report.emit_csv(b, outdir / f"{stem}.csv")
            report.emit_svg(b, outdir / f"{stem}.svg")
            text = report.verdict_table(b.report)
            (outdir / f"{stem}.txt").write_text(text, encoding="utf-8")
            prov = dict(b.provenance)
            prov["truncated"] = b.truncated
            (outdir / f"{stem}.json").write_text(json.dumps(prov, indent=2, sort_keys=True) + "\n",
                                                encoding="utf-8")
            sys.stdout.write(text)
    return 0


def cmd_spectrum(args) -> int:
    cfg = _load(args.config)
    op = discretize(scenarios.truncated_spec(cfg, args.truncation))
    est = eigenvalues_tridiagonal(op, args.k)
    print(f"scenario {cfg.name}: {args.k} lowest eigenvalues on [{cfg.interval[0]}, {args.truncation}]"
          f" (mesh {est.mesh:.6g})")
    for i, ev in enumerate(est.eigenvalues):
        print(f"  {i:4d}  {report.fmt(ev)}")
    for lam in cfg.lambdas:
        print(f"  distance from lambda = {report.fmt(lam)}: {report.fmt(distance_to_spectrum(op, lam))}")
    return 0


def criticality_form(cfg: ScenarioConfig):
    """Form and Evans potential whose capacities decide criticality of H.

    Without a potential h = 1 is a positive solution and the form of H is used
    as is; otherwise the configured ground-state transform removes the potential.
    """
    if cfg.potential == "zero" and cfg.shift == 0.0:
        lo, hi = cfg.interval
        grid = make_graded_grid(lo, hi, cfg.cells)
        base = lo if cfg.base is None else cfg.base
        grid = grid.with_nodes([base])
        spec = OperatorSpec.build(grid, scenarios.coefficients(cfg), factor=cfg.factor,
                                  singular_lo=cfg.singular_lo)
        one = GridFunction(grid, np.ones(grid.count), np.zeros(grid.count))
        return spec, evans_potential_1d(spec, one, base, require_range=False), "reference h = 1"
    P = scenarios.prepare(cfg)
    return P.spec_mu, P.evans, "ground-state transformed"


def cmd_criticality(args) -> int:
    cfg = _load(args.config)
    try:
        R_list = [float(t) for t in args.R_list.split(",")]
    except ValueError:
        raise ConfigError([f"--R-list: expected comma-separated numbers, got {args.R_list!r}"]) from None
    spec_mu, evans, how = criticality_form(cfg)
    verdict = criticality_test(spec_mu, evans, args.r, R_list)
    print(f"scenario {cfg.name}: capacity of [{report.fmt(args.r)}, R] ({how})")
    for R, c in zip(R_list, verdict.capacities):
        print(f"  R = {report.fmt(R):<14} cap = {report.fmt(c)}")
    print(f"  verdict: {verdict.status}")
    return 0


def cmd_examples(args) -> int:
    blurbs = {
        "r2-parabolic": "plane in log-radius, u = 1 at lambda = 0: (i) holds, (ii) fails",
        "bessel-4d": "radial Laplacian in 4D, Dirichlet Bessel eigenfunction at lambda = 1",
        "hyperbolic": "radial hyperbolic 3-space (hyperbolic-2 for the plane), ground-state reference",
        "flat-shnol": "free particle, u = cos x, intrinsic cut-offs",
    }
    for name in scenarios.BUILTINS:
        print(f"{name:<14} {blurbs[name]}")
    return 0


def cmd_check(args) -> int:
    cfg = _load(args.config)
    P = scenarios.prepare(cfg)
    ok = True
    for name, (val, tol, passed) in pipeline.invariant_suite(P).items():
        ok &= passed
        print(f"{name:<22} {'PASS' if passed else 'FAIL'}  {report.fmt(val)} (tolerance {report.fmt(tol)})")
    try:
        adm = check_admissibility(P.seq, P.spec_mu, hardy=True)
        print(f"{'weak-hardy':<22} {'PASS' if adm.hardy_ratio <= 10 else 'FAIL'}  max/min "
              f"{report.fmt(adm.hardy_ratio)}")
        ok &= adm.passed
    except ShnolError as exc:
        print(f"{'weak-hardy':<22} SKIP  {exc}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shnol", description="Shnol-type spectral diagnostics")
    ap.add_argument("--version", action="version", version=f"shnol {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the full pipeline and write CSV/SVG reports")
    p.add_argument("config", help="config file, directory of configs, or built-in name")
    p.add_argument("--out", help=f"output root (default $SHNOL_OUT or {DEFAULT_OUT})")
    p.add_argument("--mesh-halve", action="store_true", help="rerun at half mesh, add change columns")
    p.add_argument("--lambda", dest="lam", type=float, help="override the spectral parameter")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("spectrum", help="lowest eigenvalues of the truncated discretization")
    p.add_argument("config")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--truncation", type=float, required=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("criticality", help="capacity sequence and criticality verdict")
    p.add_argument("config")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--R-list", dest="R_list", required=True)
    p.set_defaults(func=cmd_criticality)

    p = sub.add_parser("examples", help="list built-in scenarios")
    p.set_defaults(func=cmd_examples)

    p = sub.add_parser("check", help="admissibility and invariant suite only")
    p.add_argument("config")
    p.set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    except (ShnolError, FloatingPointError, OverflowError) as exc:
        print(f"scenario failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
