"""Numba acceleration toggle.

Hot numeric kernels are compiled with numba by default. Setting the
environment variable ``RTS_NO_NUMBA=1`` before import selects the plain
NumPy/Python implementations instead (same code, undecorated), which is
useful for debugging and for benchmarking the two paths against each other.
"""

import os

_DISABLE_VALUES = {"1", "true", "yes", "on"}

USE_NUMBA = os.environ.get("RTS_NO_NUMBA", "").strip().lower() not in _DISABLE_VALUES

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False

if not USE_NUMBA:

    def njit(*args, **kwargs):
        """No-op stand-in for numba.njit: returns the function unchanged."""
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap
