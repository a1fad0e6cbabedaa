"""numba switch.

Kernels decorated with :func:`njit` compile with numba unless ``DSNN_DISABLE_NUMBA``
is set to a truthy value or numba cannot be imported; then the decorator
returns the plain Python function and callers use the numpy path.
"""
from __future__ import annotations

import functools
import os

_FLAG = os.environ.get("DSNN_DISABLE_NUMBA", "").strip().lower()

try:
    import numba

    NUMBA_OK = True
except ImportError:  # pragma: no cover
    numba = None
    NUMBA_OK = False

USE_NUMBA = NUMBA_OK and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` when acceleration is on, identity otherwise."""
    if USE_NUMBA:
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return numba.njit(*args, **kwargs)

    def decorator(f):
        @functools.wraps(f)
        def wrapper(*a, **kw):
            return f(*a, **kw)

        return wrapper

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return decorator(args[0])
    return decorator


__all__ = ["njit", "NUMBA_OK", "USE_NUMBA"]
