"""Selects the numba or pure-numpy path for the hot kernels.

Set ``RBFGAN_NO_NUMBA=1`` to force the numpy fallback; it is also used
when numba cannot be imported.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

_ENV_FLAG = "RBFGAN_NO_NUMBA"
_use_numba = numba is not None and os.environ.get(_ENV_FLAG, "").strip().lower() in ("", "0", "false", "no")


def njit(func):
    if numba is None:
        return func
    return numba.njit(cache=True, fastmath=False, nogil=True)(func)


def use_numba():
    return _use_numba


def backend():
    return "numba" if _use_numba else "numpy"


def set_backend(name):
    """Switch backend at runtime; returns the previous name."""
    global _use_numba
    prev = backend()
    if name == "numba":
        if numba is None:
            raise RuntimeError("numba is not installed")
        _use_numba = True
    elif name == "numpy":
        _use_numba = False
    else:
        raise ValueError(f"unknown backend {name!r}")
    return prev
