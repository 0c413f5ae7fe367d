# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: per-segment moment accumulation and line-grid scans.

Mirrors `_kernels_py` exactly; `_backend` picks whichever imports.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow

cnp.import_array()


def segment_moments(const double[:, ::1] positions, const double[::1] weights,
                    const long long[::1] starts):
    """Raw weighted moments (mass, first, second) of contiguous segments."""
    cdef Py_ssize_t M = starts.shape[0]
    cdef Py_ssize_t N = positions.shape[0]
    cdef Py_ssize_t n = positions.shape[1]
    mass_arr = np.zeros(M, dtype=np.float64)
    first_arr = np.zeros((M, n), dtype=np.float64)
    second_arr = np.zeros((M, n, n), dtype=np.float64)
    if M == 0:
        return mass_arr, first_arr, second_arr
    cdef double[::1] mass = mass_arr
    cdef double[:, ::1] first = first_arr
    cdef double[:, :, ::1] second = second_arr
    cdef Py_ssize_t i, a, d1, d2, s, e
    cdef double w, acc, wx
    for i in range(M):
        s = starts[i]
        e = starts[i + 1] if i + 1 < M else N
        acc = 0.0
        for a in range(s, e):
            w = weights[a]
            acc += w
            for d1 in range(n):
                wx = w * positions[a, d1]
                first[i, d1] += wx
                for d2 in range(d1, n):
                    second[i, d1, d2] += wx * positions[a, d2]
        mass[i] = acc
    # mirror the upper triangle
    for i in range(M):
        for d1 in range(n):
            for d2 in range(d1 + 1, n):
                second[i, d2, d1] = second[i, d1, d2]
    return mass_arr, first_arr, second_arr


def line_grid_objective(const double[:, ::1] positions, const double[::1] weights,
                        const double[::1] cos_t, const double[::1] sin_t,
                        const double[::1] offsets, double p):
    """out[t, s] = sum_i w_i |x_i . (cos_t, sin_t) - offsets[s]|^p."""
    cdef Py_ssize_t N = positions.shape[0]
    cdef Py_ssize_t T = cos_t.shape[0]
    cdef Py_ssize_t S = offsets.shape[0]
    out_arr = np.zeros((T, S), dtype=np.float64)
    if N == 0:
        return out_arr
    cdef double[:, ::1] out = out_arr
    proj_arr = np.empty(N, dtype=np.float64)
    cdef double[::1] proj = proj_arr
    cdef Py_ssize_t t, a, s
    cdef double ct, st, d, acc
    cdef bint p_is_two = (p == 2.0)
    cdef bint p_is_one = (p == 1.0)
    for t in range(T):
        ct = cos_t[t]
        st = sin_t[t]
        for a in range(N):
            proj[a] = positions[a, 0] * ct + positions[a, 1] * st
        for s in range(S):
            acc = 0.0
            if p_is_two:
                for a in range(N):
                    d = proj[a] - offsets[s]
                    acc += weights[a] * d * d
            elif p_is_one:
                for a in range(N):
                    acc += weights[a] * fabs(proj[a] - offsets[s])
            else:
                for a in range(N):
                    acc += weights[a] * pow(fabs(proj[a] - offsets[s]), p)
            out[t, s] = acc
    return out_arr
