# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for the walk and the branching chain.

Semantics are identical to :mod:`rwre_mle._pykernels`; both consume the
same uniform buffers in the same order.
"""
from libc.math cimport log, floor

import numpy as np
cimport numpy as cnp

cnp.import_array()


def walk_chunk(const double[::1] omega, Py_ssize_t offset, long long x,
               long long target, const double[::1] u, long long[::1] out_pos):
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t m = u.shape[0]
    if x == target:
        return 0, x, 0
    while i < m:
        out_pos[i] = x
        if u[i] < omega[x + offset]:
            x += 1
        else:
            x -= 1
        i += 1
        if x == target:
            return i, x, 0
        if x + offset == 0:
            return i, x, 2
    return i, x, 1


def bpre_chunk(const double[::1] omega, long long[::1] z, Py_ssize_t k,
               const double[::1] u, long long cap):
    cdef Py_ssize_t n = z.shape[0] - 1
    cdef Py_ssize_t used = 0
    cdef Py_ssize_t avail = u.shape[0]
    cdef long long m, j, total
    cdef double lq
    while k < n:
        m = z[k] + 1
        if used + m > avail:
            return k, used, 1
        lq = log(1.0 - omega[k])
        total = 0
        for j in range(m):
            total += <long long>floor(log(1.0 - u[used + j]) / lq)
        used += m
        z[k + 1] = total
        k += 1
        if total > cap:
            return k, used, 2
    return k, used, 0
