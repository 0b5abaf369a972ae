"""Pure-Python versions of the hot loops.

Every function here has a twin with the same signature in ``_kernels.pyx``.
They operate on contiguous float64 arrays and return new arrays.
"""

import math

import numpy as np

_TINY = 1e-300


def sturm_count(diag, off2, x):
    """Number of eigenvalues of the symmetric tridiagonal matrix below ``x``.

    ``off2`` holds the squared off-diagonal entries (length n-1).
    """
    n = diag.shape[0]
    count = 0
    q = diag[0] - x
    if q < 0.0:
        count += 1
    for i in range(1, n):
        if q == 0.0:
            q = _TINY
        q = diag[i] - x - off2[i - 1] / q
        if q < 0.0:
            count += 1
    return count


def bisect_eigs(diag, off2, lo, hi, il, iu, tol):
    """Eigenvalues with (0-based) indices ``il <= k < iu`` by Sturm bisection.

    ``[lo, hi]`` must enclose the whole spectrum (Gershgorin bounds).
    """
    out = np.empty(iu - il)
    for j in range(il, iu):
        a, b = lo, hi
        while b - a > tol * max(1.0, abs(a), abs(b)):
            mid = 0.5 * (a + b)
            if mid == a or mid == b:
                break
            if sturm_count(diag, off2, mid) > j:
                b = mid
            else:
                a = mid
        out[j - il] = 0.5 * (a + b)
    return out


def tridiag_solve(diag, off, rhs):
    """Solve the symmetric tridiagonal system by the Thomas algorithm."""
    n = diag.shape[0]
    c = np.empty(n)
    d = np.empty(n)
    x = np.empty(n)
    beta = diag[0]
    if beta == 0.0:
        raise ZeroDivisionError("zero pivot")
    c[0] = 0.0
    d[0] = rhs[0] / beta
    for i in range(1, n):
        c[i] = off[i - 1] / beta
        beta = diag[i] - off[i - 1] * c[i]
        if beta == 0.0:
            raise ZeroDivisionError("zero pivot")
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / beta
    x[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i + 1] * x[i + 1]
    return x


def tridiag_matvec(diag, off, v):
    n = diag.shape[0]
    out = np.empty(n)
    for i in range(n):
        s = diag[i] * v[i]
        if i > 0:
            s += off[i - 1] * v[i - 1]
        if i < n - 1:
            s += off[i] * v[i + 1]
        out[i] = s
    return out


def rk4_linear(x, invp, q, u0, f0, limit):
    """Classical RK4 for u' = f/p, f' = q u on the nodes ``x``.

    ``invp`` and ``q`` are sampled on the half-step lattice: entry ``2k`` at
    ``x[k]`` and ``2k+1`` at the midpoint of step k.  When |u| or |f| exceeds
    ``limit`` the state is rescaled and the shift is accumulated in ``logs``
    (natural log), so that the true solution is ``u * exp(logs)``.
    """
    n = x.shape[0]
    u = np.empty(n)
    f = np.empty(n)
    logs = np.empty(n)
    cu, cf, shift = u0, f0, 0.0
    u[0], f[0], logs[0] = cu, cf, 0.0
    for k in range(n - 1):
        h = x[k + 1] - x[k]
        a0, am, a1 = invp[2 * k], invp[2 * k + 1], invp[2 * k + 2]
        b0, bm, b1 = q[2 * k], q[2 * k + 1], q[2 * k + 2]
        k1u = a0 * cf
        k1f = b0 * cu
        k2u = am * (cf + 0.5 * h * k1f)
        k2f = bm * (cu + 0.5 * h * k1u)
        k3u = am * (cf + 0.5 * h * k2f)
        k3f = bm * (cu + 0.5 * h * k2u)
        k4u = a1 * (cf + h * k3f)
        k4f = b1 * (cu + h * k3u)
        cu = cu + h * (k1u + 2.0 * k2u + 2.0 * k3u + k4u) / 6.0
        cf = cf + h * (k1f + 2.0 * k2f + 2.0 * k3f + k4f) / 6.0
        big = max(abs(cu), abs(cf))
        if big > limit:
            cu /= big
            cf /= big
            shift += math.log(big)
        u[k + 1], f[k + 1], logs[k + 1] = cu, cf, shift
    return u, f, logs
