# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner-loop kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport NAN, isfinite

cnp.import_array()

BACKEND = "cython"


cdef inline void _combine_row(const double[:, ::1] h, const double[:, ::1] r,
                              Py_ssize_t k, Py_ssize_t branches,
                              double *out_re, double *out_im, double *out_scale) noexcept nogil:
    cdef double num_re = 0.0, num_im = 0.0, scale = 0.0
    cdef double hr, hi, rr, ri
    cdef Py_ssize_t b
    for b in range(branches):
        hr = h[k, 2 * b]
        hi = h[k, 2 * b + 1]
        rr = r[k, 2 * b]
        ri = r[k, 2 * b + 1]
        num_re = num_re + (hr * rr + hi * ri)
        num_im = num_im + (hr * ri - hi * rr)
        scale = scale + (hr * hr + hi * hi)
    out_scale[0] = scale
    if scale == 0.0:
        out_re[0] = NAN
        out_im[0] = NAN
    else:
        out_re[0] = num_re / scale
        out_im[0] = num_im / scale


cdef inline Py_ssize_t _nearest(double cr, double ci, const double[:, ::1] p,
                                Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t j, best = 0
    cdef double dr, di, d, best_d
    if not (isfinite(cr) and isfinite(ci)):
        return -1
    dr = cr - p[0, 0]
    di = ci - p[0, 1]
    best_d = dr * dr + di * di
    for j in range(1, m):
        dr = cr - p[j, 0]
        di = ci - p[j, 1]
        d = dr * dr + di * di
        if d < best_d:
            best_d = d
            best = j
    return best


def _as_pairs(z, ndim):
    z = np.ascontiguousarray(z, dtype=np.complex128)
    if ndim == 1:
        z = z.ravel()
        return z.view(np.float64).reshape(z.size, 2)
    return z.view(np.float64).reshape(z.shape[0], 2 * z.shape[1])


def mrc_combine(gains, received):
    gains = np.ascontiguousarray(gains, dtype=np.complex128)
    cdef Py_ssize_t n = gains.shape[0], branches = gains.shape[1], k
    cdef const double[:, ::1] h = _as_pairs(gains, 2)
    cdef const double[:, ::1] r = _as_pairs(received, 2)
    combined = np.empty(n, dtype=np.complex128)
    scale = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] c = combined.view(np.float64).reshape(n, 2)
    cdef double[::1] s = scale
    with nogil:
        for k in range(n):
            _combine_row(h, r, k, branches, &c[k, 0], &c[k, 1], &s[k])
    return combined, scale


def detect_nearest(combined, points):
    cdef const double[:, ::1] c = _as_pairs(combined, 1)
    cdef const double[:, ::1] p = _as_pairs(points, 1)
    cdef Py_ssize_t n = c.shape[0], m = p.shape[0], k
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    with nogil:
        for k in range(n):
            o[k] = _nearest(c[k, 0], c[k, 1], p, m)
    return out


def mrc_detect(gains, received, points):
    gains = np.ascontiguousarray(gains, dtype=np.complex128)
    cdef Py_ssize_t n = gains.shape[0], branches = gains.shape[1], k
    cdef const double[:, ::1] h = _as_pairs(gains, 2)
    cdef const double[:, ::1] r = _as_pairs(received, 2)
    cdef const double[:, ::1] p = _as_pairs(points, 1)
    cdef Py_ssize_t m = p.shape[0]
    cdef double cr, ci, scale
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    with nogil:
        for k in range(n):
            _combine_row(h, r, k, branches, &cr, &ci, &scale)
            o[k] = _nearest(cr, ci, p, m)
    return out


cdef inline int _popcount(cnp.int64_t x) noexcept nogil:
    cdef int count = 0
    while x:
        x &= x - 1
        count += 1
    return count


def count_errors(tx, rx, labels, int bits_per_symbol):
    cdef const cnp.int64_t[::1] t = np.ascontiguousarray(tx, dtype=np.int64)
    cdef const cnp.int64_t[::1] d = np.ascontiguousarray(rx, dtype=np.int64)
    cdef const cnp.int64_t[::1] lab = np.ascontiguousarray(labels, dtype=np.int64)
    cdef Py_ssize_t n = t.shape[0], k
    cdef cnp.int64_t bit_err = 0, sym_err = 0
    with nogil:
        for k in range(n):
            if d[k] != t[k]:
                sym_err += 1
                if d[k] < 0:
                    bit_err += bits_per_symbol
                else:
                    bit_err += _popcount(lab[t[k]] ^ lab[d[k]])
    return int(bit_err), int(sym_err)
