"""Named coefficient functions for scenario files.

Weights and diffusion coefficients are positive and are resolved to their
logarithms; potentials are resolved to plain values.  Tags look like
``x^3``, ``exp(2)``, ``sinh^2``, ``const(0.5)`` or ``step(1, 0, 2)``.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .errors import ConfigError

_TAG = re.compile(r"^\s*([a-z_]+)\s*(?:\^\s*([-+0-9.eE]+)|\((.*)\))?\s*$")


def _args(text: str | None) -> list[float]:
    if text is None or not text.strip():
        return []
    return [float(t) for t in text.split(",")]


def _log_sinh(x):
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    # log sinh(t) = t + log(1 - e^{-2t}) - log 2, stable for large t
    return ax + np.log1p(-np.exp(-2 * ax)) - math.log(2.0)


def _log_cosh(x):
    ax = np.abs(np.asarray(x, dtype=float))
    return ax + np.log1p(np.exp(-2 * ax)) - math.log(2.0)


def _power(k):
    return lambda x: k * np.log(np.abs(np.asarray(x, dtype=float)))


LOG_POSITIVE = {
    "one": (0, lambda: (lambda x: np.zeros_like(np.asarray(x, dtype=float)))),
    "const": (1, lambda c: (lambda x, _l=math.log(c): np.full_like(np.asarray(x, dtype=float), _l))),
    "x": (1, _power),
    "abs_x": (1, _power),
    "exp": (1, lambda k: (lambda x: k * np.asarray(x, dtype=float))),
    "sinh": (1, lambda k: (lambda x: k * _log_sinh(x))),
    "cosh": (1, lambda k: (lambda x: k * _log_cosh(x))),
}

POTENTIAL = {
    "zero": (0, lambda: (lambda x: np.zeros_like(np.asarray(x, dtype=float)))),
    "const": (1, lambda c: (lambda x: np.full_like(np.asarray(x, dtype=float), c))),
    "x": (1, lambda k: (lambda x: np.abs(np.asarray(x, dtype=float)) ** k)),
    "cos": (2, lambda amp, w: (lambda x: amp * np.cos(w * np.asarray(x, dtype=float)))),
    "sin": (2, lambda amp, w: (lambda x: amp * np.sin(w * np.asarray(x, dtype=float)))),
    "step": (3, lambda x0, left, right: (lambda x: np.where(np.asarray(x, dtype=float) < x0, left, right))),
    "hyperbolic": (1, lambda n: (lambda x: np.full_like(np.asarray(x, dtype=float), -((n - 1) / 2.0) ** 2))),
}


def parse_tag(tag: str, table: dict, key: str):
    """Resolve ``tag`` against ``table``; raises ConfigError naming ``key``."""
    m = _TAG.match(tag)
    valid = ", ".join(sorted(table))
    if not m or m.group(1) not in table:
        name = m.group(1) if m else tag.strip()
        raise ConfigError([f"{key}: unknown tag {name!r}; valid tags: {valid}"])
    name = m.group(1)
    arity, make = table[name]
    try:
        args = [float(m.group(2))] if m.group(2) is not None else _args(m.group(3))
    except ValueError:
        raise ConfigError([f"{key}: bad arguments in {tag!r}"]) from None
    if len(args) != arity:
        raise ConfigError([f"{key}: tag {name!r} takes {arity} argument(s), got {len(args)}"])
    if name == "const" and table is LOG_POSITIVE and not args[0] > 0:
        raise ConfigError([f"{key}: const weight must be positive"])
    return make(*args)


def log_positive(tag: str, key: str = "weight"):
    return parse_tag(tag, LOG_POSITIVE, key)


def potential(tag: str, key: str = "potential"):
    return parse_tag(tag, POTENTIAL, key)
