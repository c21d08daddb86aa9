"""JIT selection for the numeric kernels.

Kernels are written once in numba-compatible Python. When numba is available
and ``SCORETRACK_DISABLE_NUMBA`` is unset (or ``0``), they are compiled with
``numba.njit``; otherwise the same functions run as plain Python over numpy
arrays. Both paths must produce identical results.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("SCORETRACK_DISABLE_NUMBA", "0").strip().lower()

try:  # pragma: no cover - exercised implicitly by the environment
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

USE_NUMBA: bool = _numba is not None and _FLAG in ("", "0", "false", "no")


def jit(fn):
    """Compile ``fn`` with numba in nopython mode when enabled."""
    if USE_NUMBA:
        return _numba.njit(cache=True, nogil=True)(fn)
    return fn


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
