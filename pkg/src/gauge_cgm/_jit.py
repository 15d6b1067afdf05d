"""Numba switch.

Set ``GAUGE_CGM_DISABLE_NUMBA=1`` to run every kernel through its pure-numpy
implementation. The flag is read once, at import time.
"""
import os

_DISABLED = os.environ.get("GAUGE_CGM_DISABLE_NUMBA", "").strip().lower() in {
    "1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit
    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def decorator(func):
            return func
        return decorator


def backend():
    return "numba" if HAS_NUMBA else "numpy"
