"""Optional numba acceleration for scalar-sequential hot loops.

The decorated functions are written in plain numpy-compatible Python and
run unchanged without numba; the jit only removes interpreter overhead
from loops that cannot be vectorized (sequential single-flip sweeps,
Gray-code enumeration).
"""

from __future__ import annotations

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def maybe_jit(fn):
    """Compile with numba when available, else return the function as-is."""
    if HAVE_NUMBA:
        return njit(cache=True)(fn)
    return fn
