# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: staged group-ring butterflies on int64 tensors.

A value of Z[w_p] is carried as a length-p vector of integer counts per
exponent (the full, unreduced basis); multiplying by w_p^e is a cyclic index
shift, so a whole transform stage is shift-and-accumulate with no bignum
work.  Counts stay below the group order, far inside int64 range.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def butterfly_stage(cnp.int64_t[:, :, :, ::1] w, int p, int sign):
    """One transform stage along an axis of length ``p``.

    ``w`` has shape (A, p, B, p): batch, the coordinate being transformed,
    batch, exponent.  Returns ``out`` with out[a, j, b, :] =
    sum_x  w_p^(sign*j*x) * w[a, x, b, :], the monomial product realised as a
    cyclic shift of the exponent axis.
    """
    cdef Py_ssize_t A = w.shape[0]
    cdef Py_ssize_t B = w.shape[2]
    cdef Py_ssize_t a, b, j, x, k, src
    cdef int shift
    out_arr = np.zeros((A, p, B, p), dtype=np.int64)
    cdef cnp.int64_t[:, :, :, ::1] out = out_arr
    for j in range(p):
        for x in range(p):
            shift = (sign * j * x) % p
            if shift < 0:
                shift += p
            for a in range(A):
                for b in range(B):
                    for k in range(p):
                        src = k - shift
                        if src < 0:
                            src += p
                        out[a, j, b, k] += w[a, x, b, src]
    return out_arr
