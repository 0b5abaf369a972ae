"""Backend selection for the numerical kernels.

The compiled extension is used when it imports; otherwise the pure-Python
module is used.  Setting ``SHNOL_PURE_PYTHON=1`` forces the fallback.
"""

import os

if os.environ.get("SHNOL_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _kernels_py as _impl

        BACKEND = "python"

sturm_count = _impl.sturm_count
bisect_eigs = _impl.bisect_eigs
tridiag_solve = _impl.tridiag_solve
tridiag_matvec = _impl.tridiag_matvec
rk4_linear = _impl.rk4_linear

__all__ = [
    "BACKEND",
    "sturm_count",
    "bisect_eigs",
    "tridiag_solve",
    "tridiag_matvec",
    "rk4_linear",
]
