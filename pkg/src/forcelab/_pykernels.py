"""Pure-Python versions of the hot kernels (fallback backend)."""

from __future__ import annotations


def rank_rows(rows):
    # pivot on the highest set bit
    pivots = {}
    for r in rows:
        while r:
            top = r.bit_length() - 1
            p = pivots.get(top)
            if p is None:
                pivots[top] = r
                break
            r ^= p
    return len(pivots)


def translate_scan(a_words, b_words, ell):
    """Every x < 2**ell with a ^ x in b_words for all a, by full scan."""
    bset = set(b_words)
    out = []
    for x in range(1 << ell):
        for a in a_words:
            if (a ^ x) not in bset:
                break
        else:
            out.append(x)
    return out


def pair_options(x, d, levels):
    """{sigma: {h}} over (h, level set) with x + sigma and x + d + sigma both
    in the level set."""
    out = {}
    for h, lev in levels:
        for t in lev:
            if t ^ d in lev:
                s = x ^ t
                hs = out.get(s)
                if hs is None:
                    out[s] = {h}
                else:
                    hs.add(h)
    return out
