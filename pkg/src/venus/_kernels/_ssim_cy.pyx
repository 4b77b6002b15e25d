# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled SSIM windowed moments: separable valid-mode Gaussian filtering
of the five moment planes in one pass over the data."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"


cdef void _filter_rows(double[:, ::1] src, double[:] taps, double[:, ::1] dst) noexcept nogil:
    cdef Py_ssize_t n = taps.shape[0]
    cdef Py_ssize_t rows = dst.shape[0]
    cdef Py_ssize_t cols = dst.shape[1]
    cdef Py_ssize_t r, c, k
    cdef double acc
    for r in range(rows):
        for c in range(cols):
            acc = 0.0
            for k in range(n):
                acc += taps[k] * src[r + k, c]
            dst[r, c] = acc


cdef void _filter_cols(double[:, ::1] src, double[:] taps, double[:, ::1] dst) noexcept nogil:
    cdef Py_ssize_t n = taps.shape[0]
    cdef Py_ssize_t rows = dst.shape[0]
    cdef Py_ssize_t cols = dst.shape[1]
    cdef Py_ssize_t r, c, k
    cdef double acc
    for r in range(rows):
        for c in range(cols):
            acc = 0.0
            for k in range(n):
                acc += taps[k] * src[r, c + k]
            dst[r, c] = acc


cdef _filter_valid(double[:, ::1] img, double[:] taps):
    cdef Py_ssize_t n = taps.shape[0]
    cdef Py_ssize_t rows = img.shape[0] - n + 1
    cdef Py_ssize_t cols = img.shape[1] - n + 1
    tmp = np.empty((rows, img.shape[1]), dtype=np.float64)
    out = np.empty((rows, cols), dtype=np.float64)
    cdef double[:, ::1] tmp_view = tmp
    cdef double[:, ::1] out_view = out
    with nogil:
        _filter_rows(img, taps, tmp_view)
        _filter_cols(tmp_view, taps, out_view)
    return out


def window_moments(x, y, taps):
    """Same contract as the numpy kernel: five valid-window moment planes."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    taps = np.ascontiguousarray(taps, dtype=np.float64)
    mu_x = _filter_valid(x, taps)
    mu_y = _filter_valid(y, taps)
    var_x = _filter_valid(np.multiply(x, x), taps) - mu_x * mu_x
    var_y = _filter_valid(np.multiply(y, y), taps) - mu_y * mu_y
    cov_xy = _filter_valid(np.multiply(x, y), taps) - mu_x * mu_y
    return mu_x, mu_y, var_x, var_y, cov_xy
