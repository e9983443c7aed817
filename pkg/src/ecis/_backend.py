"""Selects the numba or pure-numpy implementation of the hot kernels.

Set ``ECIS_DISABLE_NUMBA=1`` to force the numpy path even when numba is
installed. The choice is made once, at import time.
"""
import os

_FLAG = os.environ.get("ECIS_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG in ("1", "true", "yes", "on")

try:
    import numba  # noqa: F401
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap


USE_NUMBA = NUMBA_AVAILABLE and not DISABLED_BY_ENV


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
