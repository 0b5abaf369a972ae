"""Compare the compiled kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--size N] [--repeat R]

Each kernel runs on identical inputs under both backends; the table reports
the best wall time of R repeats, the speedup, and the largest difference
between the two results.
"""

import argparse
import timeit

import numpy as np

from shnol import _kernels_py as pure

try:
    from shnol import _kernels as compiled
except ImportError:  # extension not built
    compiled = None


def _inputs(n: int, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    diag = 2.0 + rng.random(n)
    off = -0.5 - 0.4 * rng.random(n - 1)
    off2 = off ** 2
    rhs = rng.standard_normal(n)
    x = np.linspace(0.0, 10.0, n)
    invp = 1.0 + 0.1 * rng.random(2 * n - 1)
    q = -1.0 + 0.1 * rng.random(2 * n - 1)
    return dict(diag=diag, off=off, off2=off2, rhs=rhs, x=x, invp=invp, q=q)


def _cases(d: dict, k: int):
    lo, hi = float(d["diag"].min() - 2), float(d["diag"].max() + 2)
    return {
        "sturm_count": lambda m: m.sturm_count(d["diag"], d["off2"], 2.5),
        "bisect_eigs": lambda m: m.bisect_eigs(d["diag"], d["off2"], lo, hi, 0, k, 1e-12),
        "tridiag_solve": lambda m: m.tridiag_solve(d["diag"], d["off"], d["rhs"]),
        "tridiag_matvec": lambda m: m.tridiag_matvec(d["diag"], d["off"], d["rhs"]),
        "rk4_linear": lambda m: m.rk4_linear(d["x"], d["invp"], d["q"], 1.0, 0.0, 1e100),
    }


def _diff(a, b) -> float:
    if isinstance(a, tuple):
        return max(_diff(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--eigs", type=int, default=5)
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled extension not available; build with pip install -e .")
        return
    d = _inputs(args.size)
    print(f"n = {args.size}, best of {args.repeat}")
    print(f"{'kernel':<16}{'cython [s]':>12}{'python [s]':>12}{'speedup':>10}{'max rel diff':>14}")
    for name, fn in _cases(d, args.eigs).items():
        tc = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: fn(pure), number=1, repeat=args.repeat))
        diff = _diff(fn(compiled), fn(pure))
        print(f"{name:<16}{tc:>12.4g}{tp:>12.4g}{tp / tc:>10.1f}{diff:>14.3g}")


if __name__ == "__main__":
    main()
