"""Optional numba acceleration.

Set ``SYNKIT_NUMBA=0`` to force the pure-numpy code paths, even when numba
is importable.  The flag is read once at import time.
"""
import os

_flag = os.environ.get("SYNKIT_NUMBA", "1").strip().lower()
_wanted = _flag not in ("0", "false", "no", "off")

try:
    if not _wanted:
        raise ImportError
    import numba as _numba
    HAVE_NUMBA = True
except ImportError:
    _numba = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity decorator otherwise."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", False)
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(func):
        return func
    return wrap


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
