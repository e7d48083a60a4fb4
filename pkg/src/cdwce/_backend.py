"""Kernel backend selection.

The compiled Cython kernels are used when the extension was built;
otherwise, or when ``CDWCE_BACKEND=python`` is set, the numpy fallback
is used.  ``use_backend`` switches at runtime (tests and benchmarks).
"""

import os

from . import _kernels_py

try:
    from . import _kernels_cy
except ImportError:  # extension not built
    _kernels_cy = None

_BACKENDS = {"python": _kernels_py}
if _kernels_cy is not None:
    _BACKENDS["cython"] = _kernels_cy


def available_backends():
    return sorted(_BACKENDS)


def _initial():
    requested = os.environ.get("CDWCE_BACKEND", "").strip().lower()
    if requested:
        if requested not in _BACKENDS:
            raise ImportError(f"CDWCE_BACKEND={requested!r} is not available; have {available_backends()}")
        return _BACKENDS[requested]
    return _BACKENDS.get("cython", _kernels_py)


kernels = _initial()


def use_backend(name):
    """Select the kernel module used by the library; returns the previous name."""
    global kernels
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} is not available; have {available_backends()}")
    previous = kernels.BACKEND
    kernels = _BACKENDS[name]
    return previous


def current_backend():
    return kernels.BACKEND
