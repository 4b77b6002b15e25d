"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; the numpy
implementation is the fallback.  ``VENUS_KERNEL=numpy|cython`` forces a
backend (forcing ``cython`` when the extension is missing is an error).
"""

from __future__ import annotations

import os

from . import ssim_numpy
from .ssim_numpy import gaussian_taps

try:
    from . import _ssim_cy
except ImportError:
    _ssim_cy = None

_FORCED = os.environ.get("VENUS_KERNEL", "").strip().lower()

if _FORCED == "numpy":
    _impl = ssim_numpy
elif _FORCED == "cython":
    if _ssim_cy is None:
        raise ImportError("VENUS_KERNEL=cython but the compiled kernel is not built")
    _impl = _ssim_cy
elif _FORCED:
    raise ImportError(f"unknown VENUS_KERNEL value {_FORCED!r} (use 'numpy' or 'cython')")
else:
    _impl = _ssim_cy if _ssim_cy is not None else ssim_numpy

BACKEND = _impl.BACKEND_NAME
window_moments = _impl.window_moments

__all__ = ["BACKEND", "window_moments", "gaussian_taps", "available_backends"]


def available_backends() -> dict[str, object]:
    """Name -> module for every importable kernel backend."""
    backends: dict[str, object] = {"numpy": ssim_numpy}
    if _ssim_cy is not None:
        backends["cython"] = _ssim_cy
    return backends
