# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled series kernels; mirrors ``_kernels_py`` term for term."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

from .errors import NonConvergenceError

cnp.import_array()

DEF C_MAX_TERMS = 500
DEF C_TERM_RTOL = 1e-16
DEF C_QUIET_TERMS = 3

MAX_TERMS = C_MAX_TERMS
TERM_RTOL = C_TERM_RTOL
QUIET_TERMS = C_QUIET_TERMS


cpdef double pochhammer(double x, long n):
    cdef double out = 1.0
    cdef long k
    for k in range(n):
        out *= x + k
    return out


cpdef double hyp1f1_terminating(long n, double b, double z):
    # Neumaier-compensated: the polynomial alternates for z > 0.
    cdef double term = 1.0, total = 1.0, comp = 0.0, t
    cdef long k
    for k in range(n):
        term *= (k - n) * z / ((b + k) * (k + 1.0))
        t = total + term
        if fabs(total) >= fabs(term):
            comp += (total - t) + term
        else:
            comp += (term - t) + total
        total = t
    return total + comp


cdef int _series(double a, double b, double z, double* result) nogil:
    cdef double term = 1.0, total = 1.0, ratio
    cdef int quiet = 0
    cdef long k
    for k in range(C_MAX_TERMS):
        ratio = (a + k) * z / ((b + k) * (k + 1.0))
        term *= ratio
        total += term
        if fabs(term) <= C_TERM_RTOL * fabs(total) and fabs(ratio) < 1.0:
            quiet += 1
            if quiet >= C_QUIET_TERMS:
                result[0] = total
                return 0
        else:
            quiet = 0
    return -1


cpdef double hyp1f1_series(double a, double b, double z) except? -1.0:
    cdef double out
    if _series(a, b, z, &out) != 0:
        raise NonConvergenceError(
            f"1F1({a}, {b}, {z}) did not converge within {C_MAX_TERMS} terms"
        )
    return out


cdef inline double _laguerre(long n, double alpha, double x) nogil:
    cdef double prev, cur, nxt
    cdef long k
    if n < 0:
        return 0.0
    prev = 1.0
    if n == 0:
        return prev
    cur = 1.0 + alpha - x
    for k in range(1, n):
        nxt = ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
        prev = cur
        cur = nxt
    return cur


cpdef double laguerre(long n, double alpha, double x):
    return _laguerre(n, alpha, x)


def hyp1f1_array(double a, double b, z):
    cdef cnp.ndarray[double, ndim=1] zf = np.ascontiguousarray(z, dtype=np.float64).reshape(-1)
    cdef cnp.ndarray[double, ndim=1] out = np.empty(zf.shape[0])
    cdef Py_ssize_t i
    cdef double val
    for i in range(zf.shape[0]):
        if _series(a, b, zf[i], &val) != 0:
            raise NonConvergenceError(
                f"1F1({a}, {b}, {zf[i]}) did not converge within {C_MAX_TERMS} terms"
            )
        out[i] = val
    return out.reshape(np.shape(z))


def laguerre_array(long n, double alpha, x):
    cdef cnp.ndarray[double, ndim=1] xf = np.ascontiguousarray(x, dtype=np.float64).reshape(-1)
    cdef cnp.ndarray[double, ndim=1] out = np.empty(xf.shape[0])
    cdef Py_ssize_t i
    for i in range(xf.shape[0]):
        out[i] = _laguerre(n, alpha, xf[i])
    return out.reshape(np.shape(x))
