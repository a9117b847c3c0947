"""Pure numpy versions of the hot kernels (used when ``_ckernels`` is absent).

Dense multilinear layout: a polynomial in ``k`` variables is a length ``2**k``
array whose entry at bitmask ``S`` is the coefficient of ``prod_{i in S} x_i``.
Grid layout: the value at a point of ``F_p^k`` sits at index
``sum_i x_i * p**i``.
"""
from __future__ import annotations

import numpy as np


def _dtype_for(p: int):
    return np.uint8 if p * (p - 1) < 256 else np.int64


def grid_values(coef: np.ndarray, p: int) -> np.ndarray:
    """Evaluate a dense multilinear polynomial at every point of ``F_p^k``."""
    k = int(coef.size).bit_length() - 1
    dt = _dtype_for(p)
    arr = (np.asarray(coef) % p).astype(dt)
    post = 1
    # axis for variable i has stride 2**i before and p**i after expansion
    for i in range(k):
        pre = arr.size // (2 * post)
        a = arr.reshape(pre, 2, post)
        c0 = a[:, 0, :]
        c1 = a[:, 1, :]
        out = np.empty((pre, p, post), dtype=dt)
        for t in range(p):
            np.add(c0, c1 * dt(t) if t else 0, out=out[:, t, :], casting="unsafe")
        out %= dt(p)
        arr = out.reshape(-1)
        post *= p
    return arr


def count_chunk(coefs: np.ndarray, p: int, mode: int) -> int:
    """Count over one inner grid.

    ``mode == 0``: points where the product of all rows of ``coefs`` vanishes.
    ``mode == 1``: ``coefs`` holds ``(A, B)`` for ``f = A*x + B`` with ``x``
    eliminated; returns ``sum p*[A=0,B=0] + [A!=0]``, the number of zeros of f
    over the enlarged grid.
    """
    if mode == 0:
        zero = None
        for row in coefs:
            z = grid_values(row, p) == 0
            zero = z if zero is None else (zero | z)
        return int(np.count_nonzero(zero))
    a = grid_values(coefs[0], p)
    b = grid_values(coefs[1], p)
    a0 = a == 0
    return int(p * np.count_nonzero(a0 & (b == 0)) + (a.size - np.count_nonzero(a0)))


def iterate(indptr, indices, data, v, w_idx, w_val, p: int, steps: int):
    """Emit ``w . v`` then replace ``v`` by ``A v mod p``, ``steps`` times."""
    from scipy.sparse import csr_matrix

    n = len(v)
    A = csr_matrix(
        (np.asarray(data, dtype=np.int64), np.asarray(indices), np.asarray(indptr)), shape=(n, n)
    )
    vec = np.asarray(v, dtype=np.int64) % p
    wi = np.asarray(w_idx, dtype=np.int64)
    wv = np.asarray(w_val, dtype=np.int64)
    out = np.empty(steps, dtype=np.int64)
    for s in range(steps):
        out[s] = int(vec[wi] @ wv) % p
        vec = (A @ vec) % p
    return out, vec.astype(np.int64)


def first_return(indptr, indices, data, v, target, p: int, steps: int):
    """Smallest k in 1..steps with ``A^k v == target`` (or -1), and ``A^steps v``
    (the vector at the match when one is found)."""
    from scipy.sparse import csr_matrix

    n = len(v)
    A = csr_matrix(
        (np.asarray(data, dtype=np.int64), np.asarray(indices), np.asarray(indptr)), shape=(n, n)
    )
    vec = np.asarray(v, dtype=np.int64) % p
    tgt = np.asarray(target, dtype=np.int64) % p
    for k in range(1, steps + 1):
        vec = (A @ vec) % p
        if np.array_equal(vec, tgt):
            return k, vec
    return -1, vec
