# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled versions of the routed-proxy kernels.

Same contracts as ``distmech._kernels_py``; see that module for the maths.
"""

import numpy as np
from libc.stdint cimport int64_t


def routed_sum(const double[:, ::1] q, const int64_t[:, ::1] next_hop,
               const double[:, ::1] weight):
    cdef Py_ssize_t n = q.shape[0]
    cdef Py_ssize_t i, r
    cdef double acc
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        acc = 0.0
        for r in range(n):
            if r != i:
                acc += weight[i, r] * q[next_hop[i, r], r]
        o[i] = acc
    return out


def proxy_targets(const double[::1] y, const double[:, ::1] q,
                  const int64_t[:, ::1] next_hop, const unsigned char[:, ::1] direct,
                  double xi):
    cdef Py_ssize_t n = q.shape[0]
    cdef Py_ssize_t i, r
    out = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] t = out
    for i in range(n):
        for r in range(n):
            if direct[i, r]:
                t[i, r] = xi * y[r]
            else:
                t[i, r] = xi * q[next_hop[i, r], r]
    return out
