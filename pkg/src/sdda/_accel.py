"""Numba switch.

Set ``SDDA_DISABLE_NUMBA=1`` to force the pure-numpy kernels. If numba is
not importable the numpy kernels are used regardless.
"""

import os

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def decorator(func):
            return func

        return decorator


def numba_enabled():
    flag = os.environ.get("SDDA_DISABLE_NUMBA", "").strip().lower()
    return NUMBA_AVAILABLE and flag not in ("1", "true", "yes", "on")


USE_NUMBA = numba_enabled()
