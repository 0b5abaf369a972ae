"""Scenario files: line-oriented ``section.key = value`` pairs.

Blank lines and ``#`` comments are ignored.  All problems in a file are
collected and raised together as one ConfigError.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import registry
from .errors import ConfigError

KEYS = (
    "name",
    "operator.interval",
    "operator.weight",
    "operator.coefficient",
    "operator.potential",
    "operator.shift",
    "operator.factor",
    "operator.singular_lo",
    "lambda",
    "eigenfunction",
    "reference",
    "schedule.policy",
    "schedule.n_max",
    "schedule.evans_affine",
    "schedule.base",
    "grid.cells",
    "grid.grading",
    "outputs.directory",
)
REQUIRED = ("name", "operator.interval", "operator.weight", "lambda", "eigenfunction",
            "schedule.policy", "schedule.n_max", "grid.cells")

EIGENFUNCTIONS = ("bessel-dirichlet", "cos", "one", "regular", "shooting")
REFERENCES = ("one", "ground-state")
POLICIES = ("paper-double-exponential", "geometric", "intrinsic")
GRADINGS = ("uniform", "geometric", "banded")

_CALL = re.compile(r"^\s*([a-z][a-z0-9-]*)\s*(?:\((.*)\))?\s*$")


@dataclass
class ScenarioConfig:
    name: str
    interval: tuple
    weight: str
    coefficient: str = "one"
    potential: str = "zero"
    shift: float = 0.0
    factor: float = 1.0
    singular_lo: bool = False
    lambdas: tuple = (0.0,)
    eigenfunction: tuple = ("one",)
    reference: tuple = ("one",)
    policy: tuple = ("paper-double-exponential",)
    n_max: int = 3
    evans_affine: tuple = (1.0, 0.0)
    base: float | None = None
    cells: int = 1000
    grading: tuple = ("uniform",)
    outputs: str = "out"
    source: str = ""
    raw: dict = field(default_factory=dict)

    @property
    def lam(self) -> float:
        return self.lambdas[0]


def _call(text: str):
    m = _CALL.match(text)
    if not m:
        return None, None
    return m.group(1), m.group(2)


def _floats(text: str | None, key: str, errors: list, count=None) -> list[float]:
    if text is None or not text.strip():
        vals = []
    else:
        try:
            vals = [float(t) for t in text.split(",")]
        except ValueError:
            errors.append(f"{key}: expected numbers, got {text!r}")
            return []
    if count is not None and len(vals) not in (count if isinstance(count, tuple) else (count,)):
        errors.append(f"{key}: expected {count} number(s), got {len(vals)}")
    if any(not math.isfinite(v) for v in vals):
        errors.append(f"{key}: values must be finite")
    return vals


def _unknown(key: str, name: str, valid) -> str:
    return f"{key}: unknown tag {name!r}; valid tags: {', '.join(valid)}"


def parse_text(text: str, source: str = "<string>") -> ScenarioConfig:
    errors: list[str] = []
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0]
        if not body.strip():
            continue
        if "=" not in body:
            col = len(body) - len(body.lstrip()) + 1
            errors.append(f"{source}:{lineno}:{col}: expected 'key = value'")
            continue
        key, value = body.split("=", 1)
        col = len(key) - len(key.lstrip()) + 1
        key = key.strip()
        if key not in KEYS:
            errors.append(f"{source}:{lineno}:{col}: unknown key {key!r}")
            continue
        if key in raw:
            errors.append(f"{source}:{lineno}:{col}: duplicate key {key!r}")
            continue
        raw[key] = value.strip()
    for key in REQUIRED:
        if key not in raw:
            errors.append(f"missing required key {key!r}")
    if errors and any(k not in raw for k in REQUIRED):
        raise ConfigError(errors)

    cfg = ScenarioConfig(name=raw["name"], interval=(0.0, 1.0), weight=raw["operator.weight"],
                         source=source, raw=dict(raw))
    iv = _floats(raw["operator.interval"], "operator.interval", errors, 2)
    if len(iv) == 2:
        if not iv[0] < iv[1]:
            errors.append("operator.interval: need lo < hi")
        cfg.interval = (iv[0], iv[1])
    for key, attr, table in (
        ("operator.weight", "weight", registry.LOG_POSITIVE),
        ("operator.coefficient", "coefficient", registry.LOG_POSITIVE),
        ("operator.potential", "potential", registry.POTENTIAL),
    ):
        if key in raw:
            setattr(cfg, attr, raw[key])
        try:
            registry.parse_tag(getattr(cfg, attr), table, key)
        except ConfigError as exc:
            errors.extend(exc.errors)
    if "operator.shift" in raw:
        v = _floats(raw["operator.shift"], "operator.shift", errors, 1)
        cfg.shift = v[0] if v else 0.0
    if "operator.factor" in raw:
        v = _floats(raw["operator.factor"], "operator.factor", errors, 1)
        if v and not v[0] > 0:
            errors.append("operator.factor: must be positive")
        cfg.factor = v[0] if v else 1.0
    if "operator.singular_lo" in raw:
        s = raw["operator.singular_lo"].lower()
        if s not in ("true", "false"):
            errors.append("operator.singular_lo: expected true or false")
        cfg.singular_lo = s == "true"
    lams = _floats(raw["lambda"], "lambda", errors)
    if not lams:
        errors.append("lambda: at least one finite value required")
    cfg.lambdas = tuple(lams) or (0.0,)

    name, args = _call(raw["eigenfunction"])
    if name not in EIGENFUNCTIONS:
        errors.append(_unknown("eigenfunction", name or raw["eigenfunction"], EIGENFUNCTIONS))
    elif name == "shooting":
        cfg.eigenfunction = ("shooting", *_floats(args, "eigenfunction", errors, 2))
    else:
        cfg.eigenfunction = (name,)

    ref = raw.get("reference", "one")
    name, args = _call(ref)
    if name not in REFERENCES:
        errors.append(_unknown("reference", name or ref, REFERENCES))
    elif name == "ground-state":
        inner = (args or "").strip()
        if inner == "auto":
            cfg.reference = ("ground-state", "auto")
        elif inner.startswith("supplied:"):
            tag = inner.split(":", 1)[1].strip()
            try:
                registry.log_positive(tag, "reference")
                cfg.reference = ("ground-state", "supplied", tag)
            except ConfigError as exc:
                errors.extend(exc.errors)
        else:
            errors.append("reference: ground-state needs (auto) or (supplied: tag)")

    name, args = _call(raw["schedule.policy"])
    if name not in POLICIES:
        errors.append(_unknown("schedule.policy", name or raw["schedule.policy"], POLICIES))
    elif name == "geometric":
        v = _floats(args, "schedule.policy", errors, 2)
        if len(v) == 2 and not (v[0] > 1 and v[1] > 1):
            errors.append("schedule.policy: geometric needs base > 1 and spread > 1")
        cfg.policy = ("geometric", *v)
    elif name == "intrinsic":
        v = _floats(args, "schedule.policy", errors, 1)
        if len(v) == 1 and not 0 < v[0] < 1:
            errors.append("schedule.policy: intrinsic needs 0 < b < 1")
        cfg.policy = ("intrinsic", *v)
    else:
        cfg.policy = (name,)
    try:
        cfg.n_max = int(raw["schedule.n_max"])
        if cfg.n_max < 3:
            errors.append(f"schedule.n_max: must be >= 3, got {cfg.n_max}")
    except ValueError:
        errors.append(f"schedule.n_max: expected an integer, got {raw['schedule.n_max']!r}")
    if "schedule.evans_affine" in raw:
        v = _floats(raw["schedule.evans_affine"], "schedule.evans_affine", errors, 2)
        if len(v) == 2:
            if not v[0] > 0:
                errors.append("schedule.evans_affine: scale must be positive")
            cfg.evans_affine = (v[0], v[1])
    if "schedule.base" in raw:
        v = _floats(raw["schedule.base"], "schedule.base", errors, 1)
        cfg.base = v[0] if v else None

    try:
        cfg.cells = int(raw["grid.cells"])
        if cfg.cells < 16:
            errors.append(f"grid.cells: must be >= 16, got {cfg.cells}")
    except ValueError:
        errors.append(f"grid.cells: expected an integer, got {raw['grid.cells']!r}")
    name, args = _call(raw.get("grid.grading", "uniform"))
    if name not in GRADINGS:
        errors.append(_unknown("grid.grading", name or raw["grid.grading"], GRADINGS))
    elif name == "geometric":
        cfg.grading = ("geometric", *_floats(args, "grid.grading", errors, 1))
    elif name == "banded":
        cfg.grading = ("banded", *_floats(args, "grid.grading", errors, 2))
    else:
        cfg.grading = ("uniform",)
    cfg.outputs = raw.get("outputs.directory", "out")
    if errors:
        raise ConfigError(errors)
    return cfg


def parse_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError([f"{path}: no such file"]) from None
    except UnicodeDecodeError as exc:
        raise ConfigError([f"{path}: not UTF-8 ({exc.reason})"]) from None
    return parse_text(text, str(path))
