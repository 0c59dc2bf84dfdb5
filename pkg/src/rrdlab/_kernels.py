"""Compiled inner loops."""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def switch_chain(bits, r1, r2, c1, c2):
    """Run attempted simple switchings in place on packed rows.

    Step t looks at rows (r1[t], r2[t]) and columns (c1[t], c2[t]) and swaps
    the 2x2 minor between I and J when it is one of the two.  Returns the
    number of accepted switchings.
    """
    accepted = 0
    one = np.uint64(1)
    for t in range(r1.shape[0]):
        i1 = r1[t]
        i2 = r2[t]
        j1 = c1[t]
        j2 = c2[t]
        w1 = j1 >> 6
        w2 = j2 >> 6
        m1 = one << np.uint64(j1 & 63)
        m2 = one << np.uint64(j2 & 63)
        a = (bits[i1, w1] & m1) != 0
        b = (bits[i1, w2] & m2) != 0
        c = (bits[i2, w1] & m1) != 0
        e = (bits[i2, w2] & m2) != 0
        if a == e and b == c and a != b:
            bits[i1, w1] ^= m1
            bits[i1, w2] ^= m2
            bits[i2, w1] ^= m1
            bits[i2, w2] ^= m2
            accepted += 1
    return accepted


@numba.njit(cache=True)
def rank_mod_p_kernel(a, p):
    """Rank of an int64 matrix over GF(p); ``a`` is overwritten.  Needs p < 2**31."""
    rows, cols = a.shape
    for i in range(rows):
        for j in range(cols):
            a[i, j] %= p
    rank = 0
    for col in range(cols):
        if rank == rows:
            break
        piv = -1
        for r in range(rank, rows):
            if a[r, col] != 0:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            for j in range(cols):
                tmp = a[rank, j]
                a[rank, j] = a[piv, j]
                a[piv, j] = tmp
        # inverse of the pivot by Fermat
        base = a[rank, col]
        inv = 1
        e = p - 2
        while e > 0:
            if e & 1:
                inv = (inv * base) % p
            base = (base * base) % p
            e >>= 1
        for j in range(col, cols):
            a[rank, j] = (a[rank, j] * inv) % p
        for r in range(rank + 1, rows):
            f = a[r, col]
            if f != 0:
                for j in range(col, cols):
                    a[r, j] = (a[r, j] - f * a[rank, j]) % p
        rank += 1
    return rank
