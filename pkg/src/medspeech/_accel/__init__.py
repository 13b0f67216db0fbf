"""Kernel backend selection.

The hot inner loops (biquad recursion, polyphase resampling, gate smoothing,
edit-distance alignment) exist twice: a numba ``@njit`` version and a pure
numpy/Python version with identical semantics. Set ``MEDSPEECH_NUMBA=0`` to
force the numpy path; it is also used automatically when numba is missing.
"""
import os

from . import numpy_kernels

ENV_FLAG = "MEDSPEECH_NUMBA"


def _numba_requested():
    return os.environ.get(ENV_FLAG, "1").strip().lower() not in ("0", "false", "no", "off")


def _load_numba_kernels():
    try:
        from . import numba_kernels
    except ImportError:
        return None
    return numba_kernels


numba_kernels = _load_numba_kernels()
HAVE_NUMBA = numba_kernels is not None

if HAVE_NUMBA and _numba_requested():
    kernels = numba_kernels
    BACKEND = "numba"
else:
    kernels = numpy_kernels
    BACKEND = "numpy"


def set_backend(name):
    """Switch the active kernel set at runtime ("numba" or "numpy")."""
    global kernels, BACKEND
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba is not installed")
        kernels = numba_kernels
    elif name == "numpy":
        kernels = numpy_kernels
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    BACKEND = name
    return name


def available_backends():
    return ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]
