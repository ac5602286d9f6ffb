"""Backend selection for the hot kernels.

Numba is used when importable unless ``SPIKECOL_DISABLE_NUMBA=1`` is set, in
which case every kernel runs its pure-numpy twin. The flag is read once at
import time.
"""
import os

_DISABLED = os.environ.get("SPIKECOL_DISABLE_NUMBA", "0").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:
    _njit = None
    HAS_NUMBA = False


def backend():
    """Name of the active kernel backend: ``"numba"`` or ``"numpy"``."""
    return "numba" if HAS_NUMBA else "numpy"


def jit(fn):
    """Compile ``fn`` with ``njit(cache=True)`` when numba is active."""
    if HAS_NUMBA:
        return _njit(cache=True)(fn)
    return fn
