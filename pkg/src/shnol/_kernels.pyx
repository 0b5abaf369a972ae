# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops; see ``_kernels_py`` for documentation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, log, fmax

cnp.import_array()

cdef double _TINY = 1e-300


cdef Py_ssize_t _count(const double[::1] diag, const double[::1] off2, double x) nogil:
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i, count = 0
    cdef double q = diag[0] - x
    if q < 0.0:
        count += 1
    for i in range(1, n):
        if q == 0.0:
            q = _TINY
        q = diag[i] - x - off2[i - 1] / q
        if q < 0.0:
            count += 1
    return count


def sturm_count(const double[::1] diag, const double[::1] off2, double x):
    return _count(diag, off2, x)


def bisect_eigs(const double[::1] diag, const double[::1] off2, double lo, double hi,
                Py_ssize_t il, Py_ssize_t iu, double tol):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(iu - il)
    cdef double a, b, mid
    cdef Py_ssize_t j
    with nogil:
        for j in range(il, iu):
            a = lo
            b = hi
            while b - a > tol * fmax(1.0, fmax(fabs(a), fabs(b))):
                mid = 0.5 * (a + b)
                if mid == a or mid == b:
                    break
                if _count(diag, off2, mid) > j:
                    b = mid
                else:
                    a = mid
            out[j - il] = 0.5 * (a + b)
    return out


def tridiag_solve(const double[::1] diag, const double[::1] off, const double[::1] rhs):
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    cdef double[::1] c = np.empty(n)
    cdef double[::1] d = np.empty(n)
    x_arr = np.empty(n)
    cdef double[::1] x = x_arr
    cdef double beta = diag[0]
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
    return x_arr


def tridiag_matvec(const double[::1] diag, const double[::1] off, const double[::1] v):
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double s
    for i in range(n):
        s = diag[i] * v[i]
        if i > 0:
            s += off[i - 1] * v[i - 1]
        if i < n - 1:
            s += off[i] * v[i + 1]
        out[i] = s
    return out_arr


def rk4_linear(const double[::1] x, const double[::1] invp, const double[::1] q,
               double u0, double f0, double limit):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t k
    u_arr = np.empty(n)
    f_arr = np.empty(n)
    s_arr = np.empty(n)
    cdef double[::1] u = u_arr
    cdef double[::1] f = f_arr
    cdef double[::1] logs = s_arr
    cdef double cu = u0, cf = f0, shift = 0.0, h, big
    cdef double a0, am, a1, b0, bm, b1
    cdef double k1u, k1f, k2u, k2f, k3u, k3f, k4u, k4f
    u[0] = cu
    f[0] = cf
    logs[0] = 0.0
    with nogil:
        for k in range(n - 1):
            h = x[k + 1] - x[k]
            a0 = invp[2 * k]
            am = invp[2 * k + 1]
            a1 = invp[2 * k + 2]
            b0 = q[2 * k]
            bm = q[2 * k + 1]
            b1 = q[2 * k + 2]
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
            big = fmax(fabs(cu), fabs(cf))
            if big > limit:
                cu = cu / big
                cf = cf / big
                shift = shift + log(big)
            u[k + 1] = cu
            f[k + 1] = cf
            logs[k + 1] = shift
    return u_arr, f_arr, s_arr
