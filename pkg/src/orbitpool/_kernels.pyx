# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled resampling kernels (see ``_fallback.py`` for the reference semantics)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

cdef double KEYS_A = -0.5


cdef inline void _cubic(double f, double* w) noexcept nogil:
    cdef double a = KEYS_A
    cdef double t0 = 1.0 + f
    cdef double t1 = f
    cdef double t2 = 1.0 - f
    cdef double t3 = 2.0 - f
    w[0] = ((a * t0 - 5.0 * a) * t0 + 8.0 * a) * t0 - 4.0 * a
    w[1] = ((a + 2.0) * t1 - (a + 3.0)) * t1 * t1 + 1.0
    w[2] = ((a + 2.0) * t2 - (a + 3.0)) * t2 * t2 + 1.0
    w[3] = ((a * t3 - 5.0 * a) * t3 + 8.0 * a) * t3 - 4.0 * a


def warp_affine(src, coeffs, int order):
    cdef const double[:, ::1] s = np.ascontiguousarray(src, dtype=np.float64)
    cdef Py_ssize_t nr = s.shape[0], nc = s.shape[1]
    cdef double a11, a12, b1, a21, a22, b2
    a11, a12, b1, a21, a22, b2 = [float(x) for x in coeffs]
    if order != 1 and order != 3:
        raise ValueError(f"unsupported interpolation order {order}")
    out_arr = np.zeros((nr, nc))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, p, q, r, c, u0, v0
    cdef int ntap = 4 if order == 3 else 2
    cdef int first = -1 if order == 3 else 0
    cdef double u, v, fu, fv, acc, val, tot
    cdef double wu[4]
    cdef double wv[4]
    with nogil:
        for i in range(nr):
            for j in range(nc):
                u = a11 * j + a12 * i + b1
                v = a21 * j + a22 * i + b2
                fu = floor(u)
                fv = floor(v)
                u0 = <Py_ssize_t>fu
                v0 = <Py_ssize_t>fv
                fu = u - fu
                fv = v - fv
                if order == 3:
                    _cubic(fu, wu)
                    _cubic(fv, wv)
                else:
                    wu[0] = 1.0 - fu
                    wu[1] = fu
                    wv[0] = 1.0 - fv
                    wv[1] = fv
                tot = 0.0
                for p in range(ntap):
                    r = v0 + first + p
                    acc = 0.0
                    for q in range(ntap):
                        c = u0 + first + q
                        if r >= 0 and r < nr and c >= 0 and c < nc:
                            val = s[r, c]
                        else:
                            val = 0.0
                        acc = acc + wu[q] * val
                    tot = tot + wv[p] * acc
                out[i, j] = tot
    return out_arr


def correlate_axis(src, offsets, weights, int axis):
    cdef const double[:, ::1] s = np.ascontiguousarray(src, dtype=np.float64)
    cdef const long long[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t nr = s.shape[0], nc = s.shape[1]
    cdef Py_ssize_t nd = off.shape[0]
    out_arr = np.zeros((nr, nc))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, d, k
    cdef double acc
    with nogil:
        if axis == 1:
            for i in range(nr):
                for j in range(nc):
                    acc = 0.0
                    for d in range(nd):
                        k = j + off[d]
                        if k >= 0 and k < nc:
                            acc = acc + w[d] * s[i, k]
                    out[i, j] = acc
        else:
            for i in range(nr):
                for d in range(nd):
                    k = i + off[d]
                    if k < 0 or k >= nr:
                        continue
                    for j in range(nc):
                        out[i, j] = out[i, j] + w[d] * s[k, j]
    return out_arr
