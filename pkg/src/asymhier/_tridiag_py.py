"""Pure NumPy batched Thomas solver, the fallback for the compiled kernel."""

from __future__ import annotations

import numpy as np


def thomas_batch(a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Solve ``m`` tridiagonal systems of size ``n`` stored row-wise.

    Same conventions as the compiled kernel.  The sweep runs over ``n`` and is
    vectorized across the ``m`` systems.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    d = np.asarray(d, dtype=float)
    m, n = b.shape
    cp = np.empty((m, n))
    x = np.empty((m, n))
    piv = b[:, 0].copy()
    if np.any(piv == 0.0):
        raise ZeroDivisionError("zero pivot in tridiagonal solve")
    cp[:, 0] = c[:, 0] / piv
    x[:, 0] = d[:, 0] / piv
    for i in range(1, n):
        piv = b[:, i] - a[:, i] * cp[:, i - 1]
        if np.any(piv == 0.0):
            raise ZeroDivisionError("zero pivot in tridiagonal solve")
        cp[:, i] = c[:, i] / piv
        x[:, i] = (d[:, i] - a[:, i] * x[:, i - 1]) / piv
    for i in range(n - 2, -1, -1):
        x[:, i] -= cp[:, i] * x[:, i + 1]
    return x
