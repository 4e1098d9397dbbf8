"""Numba dispatch.

Hot kernels are written once as plain Python loops and compiled with
``numba.njit`` when numba is importable and not disabled. Setting
``SPECTRAL_GCV_DISABLE_NUMBA=1`` in the environment (before import) forces
the pure-numpy fallback implementations instead.
"""

from __future__ import annotations

import os

ENV_FLAG = "SPECTRAL_GCV_DISABLE_NUMBA"


def _numba_requested() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() not in ("1", "true", "yes", "on")


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _numba_requested()


def njit(*args, **kwargs):
    """``numba.njit`` that degrades to a no-op decorator."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)

    def wrapper(f):
        return f

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrapper
