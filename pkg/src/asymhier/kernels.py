"""Backend selection for the hot tridiagonal kernel.

The compiled Cython extension is used when it was built; otherwise, or when
the environment variable ``ASYMHIER_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the NumPy implementation is used.  ``BACKEND`` names the
active choice.
"""

from __future__ import annotations

import os

import numpy as np

from . import _tridiag_py
from .errors import SolverError

_force_pure = os.environ.get("ASYMHIER_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_pure:
        raise ImportError("pure Python backend requested")
    from ._tridiag import thomas_batch as _thomas_compiled
    BACKEND = "cython"
except ImportError:
    _thomas_compiled = None
    BACKEND = "python"


def _backend_fn(backend: str | None):
    name = backend or BACKEND
    if name == "cython":
        if _thomas_compiled is None:
            raise SolverError("compiled kernel is not available")
        return _thomas_compiled
    if name == "python":
        return _tridiag_py.thomas_batch
    raise ValueError(f"unknown backend {name!r}")


def thomas_batch(a, b, c, d, backend: str | None = None) -> np.ndarray:
    """Batched tridiagonal solve; arrays of shape ``(m, n)`` or ``(n,)``."""
    one = np.ndim(b) == 1
    arrs = [np.atleast_2d(np.asarray(v, dtype=np.float64)) for v in (a, b, c, d)]
    shape = arrs[1].shape
    arrs = [np.array(np.broadcast_to(v, shape), dtype=np.float64, order="C") for v in arrs]
    if shape[1] < 1:
        raise SolverError("empty tridiagonal system")
    try:
        x = _backend_fn(backend)(*arrs)
    except ZeroDivisionError as exc:
        raise SolverError(f"singular tridiagonal system: {exc}") from exc
    x = np.asarray(x)
    if not np.all(np.isfinite(x)):
        raise SolverError("tridiagonal solve produced non-finite values")
    return x[0] if one else x
