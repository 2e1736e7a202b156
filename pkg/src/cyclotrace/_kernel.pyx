# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled chain-DP kernels; _kernel_py.py is the reference implementation."""

import numpy as np

cimport cython

BACKEND_NAME = "compiled"

ctypedef unsigned long long u64


cdef double complex _f_chain(u64 val, int ln, const double complex* w, int k,
                             double complex* prev, double complex* cur) nogil:
    cdef int i, r
    cdef double complex pw, run, tot
    cdef double complex* a = prev
    cdef double complex* b = cur
    cdef double complex* t
    if ln < k:
        return 0
    pw = 1
    a[0] = 0
    for i in range(1, ln + 1):
        pw = pw * w[0]
        if (val >> (ln - i)) & 1ULL:
            a[i] = pw
        else:
            a[i] = 0
    for r in range(1, k):
        run = 0
        b[0] = 0
        for i in range(1, ln + 1):
            run = run * w[r] + a[i - 1] * w[r]
            if (val >> (ln - i)) & 1ULL:
                b[i] = run
            else:
                b[i] = 0
        t = a; a = b; b = t
    tot = 0
    for i in range(1, ln + 1):
        tot = tot + a[i]
    return tot


def f_chain_packed(val, ln, w):
    cdef u64 v = val
    cdef int l = ln
    cdef double complex scratch_a[65]
    cdef double complex scratch_b[65]
    if l > 64:
        raise ValueError("trace longer than 64 bits")
    warr = np.ascontiguousarray(w, dtype=np.complex128)
    cdef double complex[::1] wv = warr
    cdef int k = wv.shape[0]
    if k == 0:
        raise ValueError("empty weight vector")
    return complex(_f_chain(v, l, &wv[0], k, scratch_a, scratch_b))


def plan_rows_single(val, ln, W, klist):
    cdef u64 v = val
    cdef int l = ln
    cdef double complex scratch_a[65]
    cdef double complex scratch_b[65]
    if l > 64:
        raise ValueError("trace longer than 64 bits")
    Wc = np.ascontiguousarray(W, dtype=np.complex128)
    kc = np.ascontiguousarray(klist, dtype=np.int32)
    cdef double complex[:, ::1] Wv = Wc
    cdef int[::1] kv = kc
    cdef Py_ssize_t R = Wv.shape[0]
    out = np.zeros(R, dtype=np.complex128)
    cdef double complex[::1] ov = out
    cdef Py_ssize_t r
    with nogil:
        for r in range(R):
            ov[r] = _f_chain(v, l, &Wv[r, 0], kv[r], scratch_a, scratch_b)
    return out


def plan_batch_rows(values, lengths, weights, W, klist):
    vc = np.ascontiguousarray(values, dtype=np.uint64)
    lc = np.ascontiguousarray(lengths, dtype=np.int64)
    wc = np.ascontiguousarray(weights, dtype=np.float64)
    Wc = np.ascontiguousarray(W, dtype=np.complex128)
    kc = np.ascontiguousarray(klist, dtype=np.int32)
    cdef u64[::1] vv = vc
    cdef long long[::1] lv = lc
    cdef double[::1] wv = wc
    cdef double complex[:, ::1] Wv = Wc
    cdef int[::1] kv = kc
    cdef Py_ssize_t N = vv.shape[0]
    cdef Py_ssize_t R = Wv.shape[0]
    out = np.zeros(R, dtype=np.complex128)
    cdef double complex[::1] ov = out
    cdef double complex scratch_a[65]
    cdef double complex scratch_b[65]
    cdef Py_ssize_t i, r
    cdef double wt
    with nogil:
        for i in range(N):
            wt = wv[i]
            for r in range(R):
                ov[r] = ov[r] + wt * _f_chain(vv[i], <int> lv[i], &Wv[r, 0], kv[r],
                                              scratch_a, scratch_b)
    return out
