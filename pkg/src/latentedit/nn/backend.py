"""Kernel backend selection.

The convolution kernels exist twice: a numba-jitted implementation (the
default) and a pure-numpy fallback.  ``LATENTEDIT_BACKEND`` picks one at
import time:

    LATENTEDIT_BACKEND=numba   force the jitted kernels (error if numba missing)
    LATENTEDIT_BACKEND=numpy   force the numpy fallback
    unset / auto               numba when importable, else numpy

``set_backend`` exists so tests and the kernel benchmark can switch at
runtime; training code should not call it mid-run.
"""

import os

from . import kernels_numpy

_BACKENDS = {"numpy": kernels_numpy}
_active_name = "numpy"
_active = kernels_numpy


def _load_numba_kernels():
    if "numba" not in _BACKENDS:
        from . import kernels_numba

        _BACKENDS["numba"] = kernels_numba
    return _BACKENDS["numba"]


def available_backends() -> tuple[str, ...]:
    try:
        _load_numba_kernels()
    except ImportError:
        return ("numpy",)
    return ("numpy", "numba")


def set_backend(name: str) -> None:
    global _active, _active_name
    if name == "numba":
        _active = _load_numba_kernels()
    elif name == "numpy":
        _active = kernels_numpy
    else:
        raise ValueError(f"unknown backend {name!r}; expected 'numpy' or 'numba'")
    _active_name = name


def backend_name() -> str:
    return _active_name


def conv2d_fwd(x, w, b):
    return _active.conv2d_fwd(x, w, b)


def conv2d_dx(dout, w):
    return _active.conv2d_dx(dout, w)


def conv2d_dw(x, dout, k):
    return _active.conv2d_dw(x, dout, k)


def _init_from_env() -> None:
    choice = os.environ.get("LATENTEDIT_BACKEND", "auto").lower()
    if choice in ("numba", "numpy"):
        set_backend(choice)
        return
    if choice not in ("auto", ""):
        raise ValueError(f"LATENTEDIT_BACKEND={choice!r} not understood")
    try:
        set_backend("numba")
    except ImportError:
        set_backend("numpy")


_init_from_env()
