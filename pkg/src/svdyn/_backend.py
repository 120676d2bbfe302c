"""Kernel backend chosen at import time.

The compiled ``_ckernels`` extension is used when it was built; setting
``SVDYN_BACKEND=python`` forces the pure-Python fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
kernels = _pykernels

if os.environ.get("SVDYN_BACKEND", "").lower() not in ("python", "py", "pure"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        kernels = _ckernels
        BACKEND = "cython"


def available_backends():
    """Map backend name to kernel module for every backend importable here."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found
