"""Binary words of fixed length and linear algebra over GF(2).

A word of length ``l`` is stored as an int whose most significant of ``l``
bits is coordinate 0, so prefix restriction is a right shift and integer
order on equal lengths is lexicographic order on digit strings.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from forcelab import kernels
from forcelab.errors import CapacityError, InputError, InternalInconsistency, PreconditionError

BRUTE_FORCE_CAP = 20


@dataclass(frozen=True, order=True, slots=True)
class BitWord:
    length: int
    bits: int

    def __post_init__(self):
        if self.length < 0 or self.bits < 0 or self.bits >> self.length:
            raise InputError(f"bits {self.bits} do not fit length {self.length}")

    @classmethod
    def parse(cls, digits: str) -> "BitWord":
        if any(c not in "01" for c in digits):
            raise InputError(f"not a binary word: {digits!r}")
        return cls(len(digits), int(digits, 2) if digits else 0)

    @classmethod
    def zero(cls, length: int) -> "BitWord":
        return cls(length, 0)

    @classmethod
    def unit(cls, length: int, i: int) -> "BitWord":
        """e_i: a single 1 at coordinate i."""
        if not 0 <= i < length:
            raise InputError(f"coordinate {i} outside length {length}")
        return cls(length, 1 << (length - 1 - i))

    def __str__(self) -> str:
        return format(self.bits, f"0{self.length}b") if self.length else ""

    def __repr__(self) -> str:
        return f"BitWord('{self}')"

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(i)
        return (self.bits >> (self.length - 1 - i)) & 1

    def __add__(self, other: "BitWord") -> "BitWord":
        return add(self, other)

    def restrict(self, ell: int) -> "BitWord":
        return restrict(self, ell)

    def is_prefix_of(self, other: "BitWord") -> bool:
        return self.length <= other.length and other.bits >> (other.length - self.length) == self.bits

    def pad(self, ell: int) -> "BitWord":
        """Extend with zeros up to length ell."""
        if ell < self.length:
            raise InputError("pad target shorter than word")
        return BitWord(ell, self.bits << (ell - self.length))

    def concat(self, tail: "BitWord") -> "BitWord":
        return BitWord(self.length + tail.length, (self.bits << tail.length) | tail.bits)

    def segment(self, start: int, stop: int) -> "BitWord":
        """Coordinates [start, stop) as a word."""
        if not 0 <= start <= stop <= self.length:
            raise InputError("bad segment bounds")
        return BitWord(stop - start, (self.bits >> (self.length - stop)) & ((1 << (stop - start)) - 1))


def add(a: BitWord, b: BitWord) -> BitWord:
    if a.length != b.length:
        raise InputError(f"length mismatch: {a.length} vs {b.length}")
    return BitWord(a.length, a.bits ^ b.bits)


def restrict(a: BitWord, ell: int) -> BitWord:
    if ell < 0 or ell > a.length:
        raise InputError(f"cannot restrict length {a.length} to {ell}")
    return BitWord(ell, a.bits >> (a.length - ell))


def set_length(words: Iterable[BitWord]) -> int:
    """Common length of a nonempty word set; raises on mixed lengths."""
    lengths = {w.length for w in words}
    if len(lengths) != 1:
        raise InputError(f"word set has lengths {sorted(lengths)}")
    return lengths.pop()


def translate(words: Iterable[BitWord], x: BitWord) -> frozenset:
    return frozenset(add(w, x) for w in words)


def restrict_set(words: Iterable[BitWord], ell: int) -> frozenset:
    return frozenset(restrict(w, ell) for w in words)


def sumset(words: Iterable[BitWord]) -> frozenset:
    """All pairwise sums a + b (including a + a = 0)."""
    ws = list(words)
    return frozenset(add(a, b) for a in ws for b in ws)


def rank(words: Iterable[BitWord]) -> int:
    return kernels.rank_rows([w.bits for w in words])


def is_independent(words: Iterable[BitWord]) -> bool:
    ws = list(words)
    if not ws:
        return True
    set_length(ws)
    if len(set(ws)) != len(ws):
        return False
    return rank(ws) == len(ws)


def extend_independent(
    prefix_len: int,
    total_len: int,
    count: int,
    anchors: Sequence[Optional[BitWord]] = (),
    rng: Optional[random.Random] = None,
) -> list:
    """Words rho_0..rho_{count-1} of length total_len with anchors[a] a prefix
    of rho_a and the tails on [prefix_len, total_len) independent.

    Anchors shorter than prefix_len are padded with zeros; missing or None
    anchors mean an all-zero prefix. Tails are e_0, e_1, ... on the tail block
    unless ``rng`` is given, in which case random independent tails are drawn.
    """
    room = total_len - prefix_len
    if prefix_len < 0 or room < 0:
        raise InputError("total_len must be at least prefix_len")
    if count > room:
        raise CapacityError(f"need {count} independent tails but only {room} coordinates")
    if len(anchors) > count:
        raise InputError("more anchors than outputs")
    tails = _random_tails(room, count, rng) if rng is not None else [1 << (room - 1 - a) for a in range(count)]
    out = []
    for a in range(count):
        anchor = anchors[a] if a < len(anchors) else None
        head = 0
        if anchor is not None:
            if anchor.length > prefix_len:
                raise InputError(f"anchor {anchor} longer than prefix {prefix_len}")
            head = anchor.pad(prefix_len).bits
        out.append(BitWord(total_len, (head << room) | tails[a]))
    return out


def _random_tails(room: int, count: int, rng: random.Random) -> list:
    tails: list = []
    pivots: dict = {}  # echelon form of the accepted tails, keyed by top bit
    while len(tails) < count:
        cand = rng.getrandbits(room) if room else 0
        r = cand
        while r and (r.bit_length() - 1) in pivots:
            r ^= pivots[r.bit_length() - 1]
        if r:
            pivots[r.bit_length() - 1] = r
            tails.append(cand)
    return tails


def _check_translate_input(A: frozenset, B: frozenset) -> int:
    if not A or not B:
        raise PreconditionError("lengths", "A and B must be nonempty")
    try:
        ell = set_length(list(A) + list(B))
    except InputError as exc:
        raise PreconditionError("lengths", str(exc)) from None
    return ell


def unique_translate(A: Iterable[BitWord], B: Iterable[BitWord]) -> BitWord:
    """The unique x with A + x inside B, for B independent, |A| >= 5 and
    A + A inside B + B."""
    A, B = frozenset(A), frozenset(B)
    _check_translate_input(A, B)
    if not is_independent(B):
        raise PreconditionError("independent", "B is not linearly independent")
    if len(A) < 5:
        raise PreconditionError("size", f"|A| = {len(A)} < 5")
    if not sumset(A) <= sumset(B):
        raise PreconditionError("sums", "A + A is not contained in B + B")
    bset = {b.bits for b in B}
    a_bits = [a.bits for a in A]
    # any good x is a0 + b for some b; scan those in lexicographic order
    a0 = min(a_bits)
    ell = next(iter(A)).length
    for x in sorted({a0 ^ b for b in bset}):
        if all((a ^ x) in bset for a in a_bits):
            return BitWord(ell, x)
    raise InternalInconsistency("no translate found although the preconditions hold")


def brute_force_translate(A: Iterable[BitWord], B: Iterable[BitWord], cap: int = BRUTE_FORCE_CAP) -> frozenset:
    """All x with A + x inside B, by scanning every word of the length."""
    A, B = frozenset(A), frozenset(B)
    if not A or not B:
        raise InputError("A and B must be nonempty")
    ell = set_length(list(A) + list(B))
    if ell > cap:
        raise CapacityError(f"length {ell} above brute-force cap {cap}")
    xs = kernels.translate_scan([a.bits for a in A], [b.bits for b in B], ell)
    return frozenset(BitWord(ell, x) for x in xs)


def words_to_json(words: Iterable[BitWord]) -> dict:
    ws = sorted(words)
    return {"len": ws[0].length if ws else 0, "members": [str(w) for w in ws]}


def words_from_json(obj: dict) -> frozenset:
    ws = frozenset(BitWord.parse(s) for s in obj["members"])
    if any(w.length != obj["len"] for w in ws):
        raise InputError("member length disagrees with 'len'")
    return ws


__all__ = [
    "BitWord",
    "BRUTE_FORCE_CAP",
    "add",
    "restrict",
    "set_length",
    "translate",
    "restrict_set",
    "sumset",
    "rank",
    "is_independent",
    "extend_independent",
    "unique_translate",
    "brute_force_translate",
    "words_to_json",
    "words_from_json",
]
