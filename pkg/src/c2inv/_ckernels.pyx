# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_fallback`` (same signatures)."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint8_t, int64_t

cnp.import_array()


cdef void _expand(const uint8_t* src, uint8_t* dst, Py_ssize_t k, int p, uint8_t* tmp) noexcept nogil:
    # in-place style tensor transform: 2**k coefficients -> p**k values
    cdef Py_ssize_t size = 1 << k
    cdef Py_ssize_t post = 1, pre, a, b, t, i
    cdef const uint8_t* cur = src
    cdef uint8_t* out
    cdef uint8_t* bufs[2]
    bufs[0] = dst
    bufs[1] = tmp
    # choose starting buffer so that the final result lands in dst
    cdef int which = (k - 1) % 2 if k > 0 else 0
    cdef uint8_t c1, v
    cdef const uint8_t* row
    cdef uint8_t* dst_row
    if k == 0:
        dst[0] = src[0] % p
        return
    # inputs are already reduced mod p; each level adds c1 once per t and
    # subtracts p on overflow instead of taking a remainder
    for i in range(k):
        pre = size // (2 * post)
        out = bufs[which]
        for a in range(pre):
            row = cur + (a * 2) * post
            for b in range(post):
                out[(a * p) * post + b] = row[b]
            for t in range(1, p):
                dst_row = out + (a * p + t) * post
                for b in range(post):
                    c1 = row[post + b]
                    v = dst_row[b - post] + c1
                    if v >= p:
                        v -= p
                    dst_row[b] = v
        cur = out
        which ^= 1
        size = pre * p * post
        post *= p


def grid_values(cnp.ndarray coef, int p):
    cdef Py_ssize_t n = coef.size
    cdef Py_ssize_t k = n.bit_length() - 1
    cdef Py_ssize_t total = p ** k
    if p * (p - 1) >= 256:
        from ._fallback import grid_values as gv
        return gv(coef, p)
    cdef cnp.ndarray[uint8_t, ndim=1] src = np.ascontiguousarray(coef % p, dtype=np.uint8)
    cdef cnp.ndarray[uint8_t, ndim=1] dst = np.empty(total, dtype=np.uint8)
    cdef cnp.ndarray[uint8_t, ndim=1] tmp = np.empty(total, dtype=np.uint8)
    with nogil:
        _expand(&src[0], &dst[0], k, p, &tmp[0])
    return dst


def count_chunk(cnp.ndarray coefs, int p, int mode):
    if p * (p - 1) >= 256:
        from ._fallback import count_chunk as cc
        return cc(coefs, p, mode)
    cdef cnp.ndarray[uint8_t, ndim=2] c = np.ascontiguousarray(coefs % p, dtype=np.uint8)
    cdef Py_ssize_t rows = c.shape[0]
    cdef Py_ssize_t n = c.shape[1]
    cdef Py_ssize_t k = n.bit_length() - 1
    cdef Py_ssize_t total = p ** k
    cdef cnp.ndarray[uint8_t, ndim=1] tmp = np.empty(total, dtype=np.uint8)
    cdef cnp.ndarray[uint8_t, ndim=1] val = np.empty(total, dtype=np.uint8)
    cdef cnp.ndarray[uint8_t, ndim=1] acc = np.ones(total, dtype=np.uint8)
    cdef Py_ssize_t r, i
    cdef int64_t count = 0
    if mode == 0:
        with nogil:
            for r in range(rows):
                _expand(&c[r, 0], &val[0], k, p, &tmp[0])
                for i in range(total):
                    if val[i] == 0:
                        acc[i] = 0
            for i in range(total):
                if acc[i] == 0:
                    count += 1
        return int(count)
    cdef cnp.ndarray[uint8_t, ndim=1] bval = np.empty(total, dtype=np.uint8)
    with nogil:
        _expand(&c[0, 0], &val[0], k, p, &tmp[0])
        _expand(&c[1, 0], &bval[0], k, p, &tmp[0])
        for i in range(total):
            if val[i] != 0:
                count += 1
            elif bval[i] == 0:
                count += p
    return int(count)


def iterate(indptr, indices, data, v, w_idx, w_val, int p, Py_ssize_t steps):
    cdef cnp.ndarray[int64_t, ndim=1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] dv = np.ascontiguousarray(data, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] cur = np.ascontiguousarray(np.asarray(v, dtype=np.int64) % p)
    cdef cnp.ndarray[int64_t, ndim=1] nxt = np.empty_like(cur)
    cdef cnp.ndarray[int64_t, ndim=1] wi = np.ascontiguousarray(w_idx, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] wv = np.ascontiguousarray(w_val, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] out = np.empty(steps, dtype=np.int64)
    cdef Py_ssize_t n = cur.shape[0], nw = wi.shape[0]
    cdef Py_ssize_t s, r, j
    cdef int64_t acc
    cdef int64_t* a = &cur[0] if n > 0 else NULL
    cdef int64_t* b = &nxt[0] if n > 0 else NULL
    cdef int64_t* sw
    with nogil:
        for s in range(steps):
            acc = 0
            for j in range(nw):
                acc += a[wi[j]] * wv[j]
            out[s] = acc % p
            for r in range(n):
                acc = 0
                for j in range(ip[r], ip[r + 1]):
                    acc += dv[j] * a[ix[j]]
                b[r] = acc % p
            sw = a
            a = b
            b = sw
    if n == 0:
        return out, cur
    res = np.empty(n, dtype=np.int64)
    cdef int64_t[:] rv = res
    for r in range(n):
        rv[r] = a[r]
    return out, res


def first_return(indptr, indices, data, v, target, int p, Py_ssize_t steps):
    cdef cnp.ndarray[int64_t, ndim=1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] dv = np.ascontiguousarray(data, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] cur = np.ascontiguousarray(np.asarray(v, dtype=np.int64) % p)
    cdef cnp.ndarray[int64_t, ndim=1] nxt = np.empty_like(cur)
    cdef cnp.ndarray[int64_t, ndim=1] tg = np.ascontiguousarray(np.asarray(target, dtype=np.int64) % p)
    cdef Py_ssize_t n = cur.shape[0]
    cdef Py_ssize_t s, r, j, found = -1
    cdef int64_t acc
    cdef bint same
    cdef int64_t* a = &cur[0] if n > 0 else NULL
    cdef int64_t* b = &nxt[0] if n > 0 else NULL
    cdef int64_t* sw
    if n == 0:
        return (1 if steps >= 1 else -1), cur
    with nogil:
        for s in range(1, steps + 1):
            same = True
            for r in range(n):
                acc = 0
                for j in range(ip[r], ip[r + 1]):
                    acc += dv[j] * a[ix[j]]
                b[r] = acc % p
                if b[r] != tg[r]:
                    same = False
            sw = a
            a = b
            b = sw
            if same:
                found = s
                break
    res = np.empty(n, dtype=np.int64)
    cdef int64_t[:] rv = res
    for r in range(n):
        rv[r] = a[r]
    return found, res
