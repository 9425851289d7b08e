"""Kernel backend selection.

The compiled extension is used when it imports; set ``BICM4D_PURE_PYTHON=1``
to force the numpy fallback.
"""
import os

from bicm4d import _fallback

if os.environ.get("BICM4D_PURE_PYTHON"):
    kernels = _fallback
    BACKEND = "python"
else:
    try:
        from bicm4d import _kernels as kernels
        BACKEND = "compiled"
    except ImportError:
        kernels = _fallback
        BACKEND = "python"


def get(name):
    """Return the kernel module for ``"compiled"`` or ``"python"``."""
    if name == "python":
        return _fallback
    if name == "compiled":
        from bicm4d import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
