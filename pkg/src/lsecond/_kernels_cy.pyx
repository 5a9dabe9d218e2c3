# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled column-sparse assembly of derivative blocks times a structure basis."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def structured_block(const double[:, ::1] PT, const double[:, ::1] QT,
                     const double[::1] a, const double[::1] b,
                     const cnp.int64_t[::1] ptr, const cnp.int64_t[::1] rows,
                     const cnp.int64_t[::1] cols, const double[::1] scale):
    cdef Py_ssize_t nparam = ptr.shape[0] - 1
    cdef Py_ssize_t k = PT.shape[1]
    cdef Py_ssize_t p, e, l, i, j
    cdef double ai, bj, sc
    out = np.zeros((nparam, k), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for p in range(nparam):
            for e in range(ptr[p], ptr[p + 1]):
                i = rows[e]
                j = cols[e]
                ai = a[i]
                bj = b[j]
                for l in range(k):
                    o[p, l] += ai * PT[j, l] + bj * QT[i, l]
            sc = scale[p]
            for l in range(k):
                o[p, l] *= sc
    return out.T
