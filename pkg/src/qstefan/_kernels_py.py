"""Pure-Python series kernels.

Reference implementation of the routines compiled in ``_kernels.pyx``. The two
modules must stay numerically identical: same term recurrences, same stopping
rule, same iteration cap.
"""

import numpy as np

from .errors import NonConvergenceError

MAX_TERMS = 500
TERM_RTOL = 1e-16
QUIET_TERMS = 3


def pochhammer(x, n):
    """Rising factorial ``x (x+1) ... (x+n-1)`` as a running product."""
    out = 1.0
    for k in range(n):
        out *= x + k
    return out


def hyp1f1_terminating(n, b, z):
    """``1F1(-n; b; z)`` summed over its ``n + 1`` nonzero terms.

    Neumaier-compensated, since the polynomial alternates for ``z > 0``.
    """
    term = 1.0
    total = 1.0
    comp = 0.0
    for k in range(n):
        term *= (k - n) * z / ((b + k) * (k + 1.0))
        t = total + term
        if abs(total) >= abs(term):
            comp += (total - t) + term
        else:
            comp += (term - t) + total
        total = t
    return total + comp


def hyp1f1_series(a, b, z):
    """Direct Maclaurin series of ``1F1(a; b; z)``.

    Stops once the last three terms are each below ``TERM_RTOL`` relative to
    the partial sum and the term ratio has dropped under one (so the tail is
    shrinking, not merely small before the peak).
    """
    term = 1.0
    total = 1.0
    quiet = 0
    for k in range(MAX_TERMS):
        ratio = (a + k) * z / ((b + k) * (k + 1.0))
        term *= ratio
        total += term
        if abs(term) <= TERM_RTOL * abs(total) and abs(ratio) < 1.0:
            quiet += 1
            if quiet >= QUIET_TERMS:
                return total
        else:
            quiet = 0
    raise NonConvergenceError(
        f"1F1({a}, {b}, {z}) did not converge within {MAX_TERMS} terms"
    )


def laguerre(n, alpha, x):
    """Generalized Laguerre ``L_n^alpha(x)`` by the three-term recurrence.

    Returns 0 for ``n < 0`` so derivative formulas can index ``n - 1`` freely.
    """
    if n < 0:
        return 0.0
    prev = 1.0
    if n == 0:
        return prev
    cur = 1.0 + alpha - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
    return cur


def hyp1f1_array(a, b, z):
    z = np.asarray(z, dtype=float)
    out = np.empty(z.shape)
    flat = out.reshape(-1)
    for i, zi in enumerate(z.reshape(-1)):
        flat[i] = hyp1f1_series(a, b, float(zi))
    return out


def laguerre_array(n, alpha, x):
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape)
    flat = out.reshape(-1)
    for i, xi in enumerate(x.reshape(-1)):
        flat[i] = laguerre(n, alpha, float(xi))
    return out

