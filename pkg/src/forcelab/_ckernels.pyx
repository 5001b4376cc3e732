# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled versions of the hot kernels."""

from libc.stdint cimport uint64_t
from libc.stdlib cimport calloc, free, malloc

cdef uint64_t _MASK = 0xFFFFFFFFFFFFFFFF


cdef int _top_bit(uint64_t x) nogil:
    cdef int t = -1
    while x:
        x >>= 1
        t += 1
    return t


cdef int _rank_narrow(rows):
    cdef uint64_t basis[64]
    cdef uint64_t r
    cdef int top, i, rank = 0
    for i in range(64):
        basis[i] = 0
    for row in rows:
        r = row
        while r:
            top = _top_bit(r)
            if basis[top] == 0:
                basis[top] = r
                rank += 1
                break
            r ^= basis[top]
    return rank


cdef int _rank_wide(list rows, int width):
    # rows as arrays of 64-bit limbs, least significant limb first
    cdef Py_ssize_t nr = len(rows)
    cdef int nl = (width + 63) // 64
    cdef uint64_t *mat = <uint64_t *>calloc(nr * nl, sizeof(uint64_t))
    cdef int *pivot = <int *>malloc(width * sizeof(int))
    cdef uint64_t *cur
    cdef uint64_t *other
    cdef Py_ssize_t i
    cdef int j, limb, top, p, rank = 0
    if mat == NULL or pivot == NULL:
        free(mat)
        free(pivot)
        raise MemoryError()
    try:
        for j in range(width):
            pivot[j] = -1
        for i in range(nr):
            row = rows[i]
            for j in range(nl):
                mat[i * nl + j] = (row >> (64 * j)) & _MASK
        for i in range(nr):
            cur = mat + i * nl
            limb = nl - 1
            while True:
                while limb >= 0 and cur[limb] == 0:
                    limb -= 1
                if limb < 0:
                    break
                top = limb * 64 + _top_bit(cur[limb])
                p = pivot[top]
                if p < 0:
                    pivot[top] = <int>i
                    rank += 1
                    break
                other = mat + p * nl
                for j in range(limb + 1):
                    cur[j] ^= other[j]
    finally:
        free(mat)
        free(pivot)
    return rank


def rank_rows(rows):
    rows = list(rows)
    width = 0
    for row in rows:
        if row < 0:
            from forcelab._pykernels import rank_rows as _slow
            return _slow(rows)
        width = max(width, row.bit_length())
    if width <= 64:
        return _rank_narrow(rows)
    return _rank_wide(rows, width)


def translate_scan(a_words, b_words, int ell):
    """Every x < 2**ell with a ^ x in b_words for all a, by full scan."""
    if ell > 30:
        raise ValueError("scan length too large")
    cdef Py_ssize_t size = (<Py_ssize_t>1) << ell
    cdef Py_ssize_t na = len(a_words)
    cdef Py_ssize_t x, j
    cdef unsigned char *bmap = <unsigned char *>calloc(size, 1)
    cdef Py_ssize_t *avals = <Py_ssize_t *>calloc(na if na > 0 else 1, sizeof(Py_ssize_t))
    out = []
    try:
        for b in b_words:
            if 0 <= b < size:
                bmap[<Py_ssize_t>b] = 1
        for j in range(na):
            avals[j] = a_words[j]
        for x in range(size):
            for j in range(na):
                if not bmap[avals[j] ^ x]:
                    break
            else:
                out.append(x)
    finally:
        free(bmap)
        free(avals)
    return out


def pair_options(x, d, levels):
    """{sigma: {h}} over (h, level set) with x + sigma and x + d + sigma both
    in the level set."""
    cdef dict out = {}
    cdef object hs, t, s
    cdef frozenset lev
    for h, lev in levels:
        for t in lev:
            if (t ^ d) in lev:
                s = x ^ t
                hs = out.get(s)
                if hs is None:
                    out[s] = {h}
                else:
                    hs.add(h)
    return out
