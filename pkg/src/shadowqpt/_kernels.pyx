# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_purepy`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.string cimport memset

cnp.import_array()

ctypedef unsigned char u8


cdef inline int _inner(u8* v, u8* w, int size) nogil:
    cdef int t = 0, i
    for i in range(0, size, 2):
        t += v[i] * w[i + 1] + v[i + 1] * w[i]
    return t & 1


cdef inline void _transvect(u8* h, u8* v, int size) nogil:
    cdef int i
    if _inner(h, v, size):
        for i in range(size):
            v[i] = (v[i] + h[i]) & 1


cdef void _find_transvection(u8* x, u8* y, u8* t0, u8* t1, int size) nogil:
    cdef int i, same = 1, found = 0
    cdef u8 z[32]
    memset(t0, 0, size)
    memset(t1, 0, size)
    memset(z, 0, 32)
    for i in range(size):
        if x[i] != y[i]:
            same = 0
            break
    if same:
        return
    if _inner(x, y, size):
        for i in range(size):
            t0[i] = (x[i] + y[i]) & 1
        return
    for i in range(0, size, 2):
        if (x[i] or x[i + 1]) and (y[i] or y[i + 1]):
            z[i] = (x[i] + y[i]) & 1
            z[i + 1] = (x[i + 1] + y[i + 1]) & 1
            if not (z[i] or z[i + 1]):
                z[i + 1] = 1
                if x[i] != x[i + 1]:
                    z[i] = 1
            found = 1
            break
    if not found:
        for i in range(0, size, 2):
            if (x[i] or x[i + 1]) and not (y[i] or y[i + 1]):
                if x[i] == x[i + 1]:
                    z[i + 1] = 1
                else:
                    z[i + 1] = x[i]
                    z[i] = x[i + 1]
                break
        for i in range(0, size, 2):
            if not (x[i] or x[i + 1]) and (y[i] or y[i + 1]):
                if y[i] == y[i + 1]:
                    z[i + 1] = 1
                else:
                    z[i + 1] = y[i]
                    z[i] = y[i + 1]
                break
    for i in range(size):
        t0[i] = (x[i] + z[i]) & 1
        t1[i] = (y[i] + z[i]) & 1


cdef void _symplectic_one(const long long* draw, int k, u8* g) nogil:
    # g is (2k x 2k) row-major scratch; the level-m matrix occupies its
    # lower-right (2m x 2m) corner with row stride 2k
    cdef int stride = 2 * k
    cdef int m, nn, j, i, off
    cdef long long a, c
    cdef u8 f1[16]
    cdef u8 e1[16]
    cdef u8 eprime[16]
    cdef u8 t0[16]
    cdef u8 t1[16]
    cdef u8 row[16]
    memset(g, 0, stride * stride)
    for m in range(1, k + 1):
        nn = 2 * m
        off = stride - nn
        a = draw[2 * (m - 1)]
        c = draw[2 * (m - 1) + 1]
        for j in range(nn):
            f1[j] = (a >> j) & 1
            e1[j] = 0
        e1[0] = 1
        _find_transvection(e1, f1, t0, t1, nn)
        eprime[0] = 1
        eprime[1] = 0
        for j in range(2, nn):
            eprime[j] = (c >> (j - 1)) & 1
        _transvect(t0, eprime, nn)
        _transvect(t1, eprime, nn)
        if c & 1:
            for j in range(nn):
                f1[j] = 0
        # direct sum with the 2x2 identity in the new top-left corner
        for j in range(nn):
            g[(off + 0) * stride + off + j] = 0
            g[(off + 1) * stride + off + j] = 0
            g[(off + j) * stride + off + 0] = 0
            g[(off + j) * stride + off + 1] = 0
        g[off * stride + off] = 1
        g[(off + 1) * stride + off + 1] = 1
        for j in range(nn):
            for i in range(nn):
                row[i] = g[(off + j) * stride + off + i]
            _transvect(t0, row, nn)
            _transvect(t1, row, nn)
            _transvect(eprime, row, nn)
            _transvect(f1, row, nn)
            for i in range(nn):
                g[(off + j) * stride + off + i] = row[i]


def symplectic_batch(draws, int k):
    cdef cnp.ndarray[long long, ndim=3, mode="c"] d = np.ascontiguousarray(draws, dtype=np.int64)
    cdef Py_ssize_t nb = d.shape[0], b
    cdef cnp.ndarray[u8, ndim=3, mode="c"] out = np.empty((nb, 2 * k, 2 * k), dtype=np.uint8)
    if k < 1 or k > 8:
        raise ValueError("k must be in 1..8")
    with nogil:
        for b in range(nb):
            _symplectic_one(&d[b, 0, 0], k, &out[b, 0, 0])
    return out


def born_sample_batch(cum, u):
    cdef cnp.ndarray[double, ndim=2, mode="c"] c = np.ascontiguousarray(cum, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t ns = c.shape[0], m = c.shape[1], nr = uu.shape[1]
    cdef cnp.ndarray[long long, ndim=2, mode="c"] out = np.empty((ns, nr), dtype=np.int64)
    cdef Py_ssize_t s, r, lo, hi, mid
    cdef double x
    with nogil:
        for s in range(ns):
            for r in range(nr):
                x = uu[s, r]
                lo = 0
                hi = m
                while lo < hi:
                    mid = (lo + hi) >> 1
                    if c[s, mid] <= x:
                        lo = mid + 1
                    else:
                        hi = mid
                out[s, r] = lo if lo < m else m - 1
    return out


def product_table_values(codes, table):
    cdef cnp.ndarray[long long, ndim=2, mode="c"] cd = np.ascontiguousarray(codes, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=2, mode="c"] tb = np.ascontiguousarray(table, dtype=np.float64)
    cdef Py_ssize_t n = cd.shape[0], w = cd.shape[1], s, j
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double acc
    with nogil:
        for s in range(n):
            acc = 1.0
            for j in range(w):
                acc *= tb[j, cd[s, j]]
                if acc == 0.0:
                    break
            out[s] = acc
    return out
