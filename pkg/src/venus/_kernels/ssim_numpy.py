"""Pure-numpy SSIM windowed moments (fallback kernel).

Separable valid-mode correlation with the Gaussian window, written as a
handful of shifted adds so no convolution library is needed.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "numpy"


def gaussian_taps(size: int, sigma: float) -> np.ndarray:
    radius = (size - 1) // 2
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-0.5 * (x / sigma) ** 2)
    return taps / taps.sum()


def _filter_valid(img: np.ndarray, taps: np.ndarray) -> np.ndarray:
    n = taps.size
    rows = img.shape[0] - n + 1
    tmp = np.zeros((rows, img.shape[1]))
    for i in range(n):
        tmp += taps[i] * img[i : i + rows, :]
    cols = img.shape[1] - n + 1
    out = np.zeros((rows, cols))
    for i in range(n):
        out += taps[i] * tmp[:, i : i + cols]
    return out


def window_moments(x: np.ndarray, y: np.ndarray, taps: np.ndarray):
    """Gaussian-weighted means, variances, and covariance over every fully
    interior window of two equal-shape float64 planes."""
    mu_x = _filter_valid(x, taps)
    mu_y = _filter_valid(y, taps)
    var_x = _filter_valid(x * x, taps) - mu_x * mu_x
    var_y = _filter_valid(y * y, taps) - mu_y * mu_y
    cov_xy = _filter_valid(x * y, taps) - mu_x * mu_y
    return mu_x, mu_y, var_x, var_y, cov_xy
