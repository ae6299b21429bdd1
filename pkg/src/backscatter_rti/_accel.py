"""numba switch.

Set ``BACKSCATTER_RTI_DISABLE_NUMBA=1`` to force the pure-numpy kernels,
e.g. when debugging or on platforms without a working llvmlite.
"""

import os
import warnings

_FLAG = "BACKSCATTER_RTI_DISABLE_NUMBA"


class PerformanceWarning(UserWarning):
    pass


def _disabled_by_env():
    return os.environ.get(_FLAG, "").strip().lower() in ("1", "true", "yes", "on")


try:
    from numba import njit as _numba_njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba_njit = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _disabled_by_env()

if not HAVE_NUMBA and not _disabled_by_env():  # pragma: no cover
    warnings.warn("numba unavailable, falling back to numpy kernels",
                  PerformanceWarning)


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise.

    Kernels are always compiled when numba exists so the benchmark can compare
    both paths; ``USE_NUMBA`` only controls which path the dispatchers pick.
    """
    if HAVE_NUMBA:
        return _numba_njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda func: func


def backend():
    return "numba" if USE_NUMBA else "numpy"
