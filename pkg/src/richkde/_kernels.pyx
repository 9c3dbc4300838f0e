# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Gaussian kernel sums.

Mirrors ``richkde._fallback.gaussian_sums`` exactly in semantics; the sum over
sample rows runs in a fixed sequential order for every query point.
"""

from libc.math cimport exp

import numpy as np

# exponents above this underflow harmlessly; the term is taken as exactly 0
cdef double EXP_CUTOFF = 700.0


def gaussian_sums(const double[:, ::1] data, const double[:, ::1] points,
                  const double[::1] bandwidths):
    """Return S[j, k] = sum_i exp(-|points[j] - data[i]|^2 / (2 h_k^2))."""
    cdef Py_ssize_t n = data.shape[0]
    cdef Py_ssize_t d = data.shape[1]
    cdef Py_ssize_t m = points.shape[0]
    cdef Py_ssize_t r = bandwidths.shape[0]
    cdef Py_ssize_t i, j, k, l
    cdef double sq, diff, a

    if points.shape[1] != d:
        raise ValueError("points and data differ in dimension")

    out_arr = np.zeros((m, r), dtype=np.float64)
    half_inv = np.empty(r, dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] hinv = half_inv
    for k in range(r):
        hinv[k] = 0.5 / (bandwidths[k] * bandwidths[k])

    with nogil:
        for j in range(m):
            for i in range(n):
                sq = 0.0
                for l in range(d):
                    diff = points[j, l] - data[i, l]
                    sq = sq + diff * diff
                for k in range(r):
                    a = sq * hinv[k]
                    if a <= EXP_CUTOFF:
                        out[j, k] = out[j, k] + exp(-a)
    return out_arr
