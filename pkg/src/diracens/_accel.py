"""numba switch.

Set DIRACENS_DISABLE_NUMBA=1 to run the pure-numpy kernels, and
DIRACENS_NUM_THREADS to cap numba's thread pool.
"""
import os

DISABLED = os.environ.get("DIRACENS_DISABLE_NUMBA", "0").lower() in ("1", "true", "yes")

try:
    if DISABLED:
        raise ImportError
    import numba
    from numba import njit
    HAS_NUMBA = True
    _nt = os.environ.get("DIRACENS_NUM_THREADS")
    if _nt:
        numba.set_num_threads(max(1, min(int(_nt), numba.config.NUMBA_NUM_THREADS)))
except ImportError:  # pragma: no cover - depends on environment
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def deco(f):
            return f
        return deco


def backend():
    return "numba" if HAS_NUMBA else "numpy"
