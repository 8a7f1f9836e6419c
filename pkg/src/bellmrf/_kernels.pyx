# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled grid tabulation kernels; see ``_kernels_py`` for the reference."""

import numpy as np
cimport numpy as cnp
from libc.math cimport M_PI

cnp.import_array()


def _trig(int n):
    # numpy trig so both backends share the exact same table values
    k = np.arange(n) * (np.pi / n)
    c = np.cos(k)
    s = np.sin(k)
    return np.ascontiguousarray(c * c), np.ascontiguousarray(s * s)


def mrf1_polarizer_table(int n, int tune, int orth, double alpha):
    cdef double inv = n / M_PI
    cdef double[::1] cos2
    cdef double[::1] sin2
    cos2, sin2 = _trig(n)
    out_arr = np.zeros((2, n, 2, n + 1))
    cdef double[:, :, :, ::1] out = out_arr
    cdef int s, d, rs, rd
    cdef double v, absorb
    for s in range(n):
        rs = (s - tune) % n
        if rs < 0:
            rs += n
        for d in range(n):
            rd = (d - tune) % n
            if rd < 0:
                rd += n
            v = 0.0
            if s == d and s == tune:
                v = inv * inv
            if s == d:
                v += alpha * cos2[rs] * inv
            if s == tune:
                v += alpha * cos2[rd] * inv
            out[1, s, 1, d] = v
        absorb = alpha * inv if s == orth else 0.0
        absorb += alpha * alpha * sin2[rs]
        out[1, s, 0, n] = absorb
    for s in range(n):
        for d in range(n):
            out[0, s, 1, d] = out[1, d, 0, n]
    return out_arr


def mrf2_polarizer_table(int n, int tune, double alpha, bint projection):
    cdef double inv = n / M_PI
    cdef double[::1] cos2
    cdef double[::1] sin2
    cos2, sin2 = _trig(n)
    out_arr = np.zeros((2, n, 2, n + 1, 2))
    cdef double[:, :, :, :, ::1] out = out_arr
    cdef int s, d, rs, rd
    cdef double fwd, bwd
    for s in range(n):
        rs = (s - tune) % n
        if rs < 0:
            rs += n
        for d in range(n):
            rd = (d - tune) % n
            if rd < 0:
                rd += n
            fwd = 2.0 * cos2[rs]
            bwd = 2.0 * cos2[rd]
            if projection:
                fwd = fwd * inv if d == tune else 0.0
                bwd = bwd * inv if s == tune else 0.0
            out[1, s, 1, d, 1] = fwd
            out[1, s, 1, d, 0] = bwd
            out[0, s, 1, d, 0] = 2.0 * alpha * sin2[rd]
        out[1, s, 0, n, 1] = 2.0 * alpha * sin2[rs]
    return out_arr
