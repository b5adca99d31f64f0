"""Optional numba acceleration.

Hot kernels are written once as plain Python over numpy arrays and compiled
with :func:`numba.njit` when numba is importable. Setting the environment
variable ``CRNDIST_DISABLE_NUMBA=1`` selects the uncompiled path, which runs
the exact same source under CPython and produces bit-identical results.
"""

import os

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    NUMBA_AVAILABLE = False

_FLAG = os.environ.get("CRNDIST_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = NUMBA_AVAILABLE and _FLAG not in ("1", "true", "yes", "on")


def jit(func):
    """Compile ``func`` in nopython mode, or return ``None`` without numba."""
    if not NUMBA_AVAILABLE:
        return None
    return numba.njit(cache=True, nogil=True)(func)


def default_backend():
    return "numba" if USE_NUMBA else "python"


def resolve_backend(backend):
    if backend is None or backend == "auto":
        return default_backend()
    if backend not in ("numba", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not NUMBA_AVAILABLE:
        raise ValueError("numba backend requested but numba is not installed")
    return backend
