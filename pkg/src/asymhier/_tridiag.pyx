# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batched Thomas solver (no pivoting)."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def thomas_batch(const double[:, ::1] a, const double[:, ::1] b, const double[:, ::1] c,
                 const double[:, ::1] d):
    """Solve ``m`` independent tridiagonal systems of size ``n``.

    Row ``k`` of each array holds one system: ``a`` is the sub-diagonal
    (``a[k, 0]`` ignored), ``b`` the diagonal, ``c`` the super-diagonal
    (``c[k, n-1]`` ignored) and ``d`` the right-hand side.  Returns ``x`` with
    the same shape; a zero pivot raises ``ZeroDivisionError``.
    """
    cdef Py_ssize_t m = b.shape[0]
    cdef Py_ssize_t n = b.shape[1]
    cdef Py_ssize_t k, i
    cdef double piv
    x_arr = np.empty((m, n), dtype=np.float64)
    cp_arr = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] x = x_arr
    cdef double[::1] cp = cp_arr
    for k in range(m):
        piv = b[k, 0]
        if piv == 0.0:
            raise ZeroDivisionError("zero pivot in tridiagonal solve")
        cp[0] = c[k, 0] / piv
        x[k, 0] = d[k, 0] / piv
        for i in range(1, n):
            piv = b[k, i] - a[k, i] * cp[i - 1]
            if piv == 0.0:
                raise ZeroDivisionError("zero pivot in tridiagonal solve")
            cp[i] = c[k, i] / piv
            x[k, i] = (d[k, i] - a[k, i] * x[k, i - 1]) / piv
        for i in range(n - 2, -1, -1):
            x[k, i] -= cp[i] * x[k, i + 1]
    return x_arr
