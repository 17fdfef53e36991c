"""Numba switch.

Set ``GLR_DISABLE_NUMBA=1`` to run the pure-numpy kernels.  Numba is also
skipped automatically when it cannot be imported.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("GLR_DISABLE_NUMBA", "").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in {"1", "true", "yes", "on"}


def njit(fn):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True)(fn)
