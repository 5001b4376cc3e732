"""Finite trees, the two concrete simple bases, indexed bases and towers.

Level sets travel through the public API as frozensets of BitWord. The
exhaustive checkers work on ``LSet(ell, nodes)`` with nodes as ints, which
is much cheaper to build and hash.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, NamedTuple, Optional, Sequence, Union

from forcelab.errors import BudgetExceeded, CapacityError, InputError
from forcelab.gf2 import BitWord

OMEGA = "omega"
DEPTH_CAP = 6
CERT_BUDGET = 10**6


class LSet(NamedTuple):
    ell: int
    nodes: frozenset

    def restrict(self, ell: int) -> "LSet":
        shift = self.ell - ell
        return LSet(ell, frozenset(x >> shift for x in self.nodes))

    def translate(self, rho: int) -> "LSet":
        return LSet(self.ell, frozenset(x ^ rho for x in self.nodes))


def to_lset(u: Iterable[BitWord]) -> LSet:
    ws = list(u)
    if not ws:
        raise InputError("level set must be nonempty")
    ell = ws[0].length
    if any(w.length != ell for w in ws):
        raise InputError("level set mixes lengths")
    return LSet(ell, frozenset(w.bits for w in ws))


def from_lset(s: LSet) -> frozenset:
    return frozenset(BitWord(s.ell, x) for x in s.nodes)


def _extensions(x: int, delta: int) -> range:
    return range(x << delta, (x + 1) << delta)


def _restrict_exact(u: LSet, v: LSet) -> bool:
    return u.ell < v.ell and v.restrict(u.ell).nodes == u.nodes


# simple bases

@dataclass(frozen=True)
class SimpleBase:
    """A family of level sets with a strict refinement order.

    ``successors(u, ell)`` must list every v of length ell with u < v; the
    checkers use it to reach partners without scanning all level sets.
    """

    name: str
    member_fn: Callable[[LSet], bool]
    prec_fn: Callable[[LSet, LSet], bool]
    successors: Callable[[LSet, int], Iterator[LSet]]
    min_size: int = 1
    max_member_size: Optional[int] = None


def _zero_member(s: LSet) -> bool:
    return len(s.nodes) == 1


def _zero_prec(u: LSet, v: LSet) -> bool:
    return _zero_member(u) and _zero_member(v) and _restrict_exact(u, v)


def _zero_successors(u: LSet, ell: int) -> Iterator[LSet]:
    if ell <= u.ell or not _zero_member(u):
        return
    (x,) = u.nodes
    for y in _extensions(x, ell - u.ell):
        yield LSet(ell, frozenset((y,)))


def _per_member(s: LSet) -> bool:
    return len(s.nodes) >= 3


def _per_prec(u: LSet, v: LSet) -> bool:
    if not (_per_member(u) and _per_member(v) and _restrict_exact(u, v)):
        return False
    shift = v.ell - u.ell
    counts: dict = {}
    for y in v.nodes:
        counts[y >> shift] = counts.get(y >> shift, 0) + 1
    return all(counts.get(x, 0) >= 2 for x in u.nodes)


def _per_successors(u: LSet, ell: int) -> Iterator[LSet]:
    if ell <= u.ell or not _per_member(u):
        return
    delta = ell - u.ell
    per_node = []
    for x in sorted(u.nodes):
        exts = list(_extensions(x, delta))
        choices = [c for k in range(2, len(exts) + 1) for c in itertools.combinations(exts, k)]
        per_node.append(choices)
    for pick in itertools.product(*per_node):
        yield LSet(ell, frozenset(itertools.chain.from_iterable(pick)))


O_ZERO = SimpleBase("0", _zero_member, _zero_prec, _zero_successors, 1, 1)
O_PER = SimpleBase("per", _per_member, _per_prec, _per_successors, 3, None)


def _defect_prec(u: LSet, v: LSet) -> bool:
    return _zero_member(u) and _zero_member(v) and u.ell == v.ell and u.nodes != v.nodes


def _defect_successors(u: LSet, ell: int) -> Iterator[LSet]:
    return iter(())


# singletons ordered within one length: breaks the restriction clause
O_DEFECT = SimpleBase("defect", _zero_member, _defect_prec, _defect_successors, 1, 1)

BASES = {"0": O_ZERO, "per": O_PER, "defect": O_DEFECT}


def get_base(tag: Union[str, SimpleBase]) -> SimpleBase:
    if isinstance(tag, SimpleBase):
        return tag
    try:
        return BASES[tag]
    except KeyError:
        raise InputError(f"unknown base tag {tag!r}") from None


def base_member(tag, u: Iterable[BitWord]) -> bool:
    ws = list(u)
    if not ws:
        return False
    return get_base(tag).member_fn(to_lset(ws))


def base_prec(tag, u: Iterable[BitWord], v: Iterable[BitWord]) -> bool:
    base = get_base(tag)
    su, sv = to_lset(u), to_lset(v)
    return base.member_fn(su) and base.member_fn(sv) and base.prec_fn(su, sv)


def canonical_member(tag, ell: int) -> frozenset:
    """Lexicographically first member of the smallest allowed size."""
    base = get_base(tag)
    if (1 << ell) < base.min_size:
        raise CapacityError(f"no member of base {base.name} at length {ell}")
    return frozenset(BitWord(ell, x) for x in range(base.min_size))


def canonical_successor(tag, u: Iterable[BitWord], ell: int) -> frozenset:
    """The successor keeping each node's zero-extension and, where the base
    needs splitting, the next extension too."""
    base = get_base(tag)
    su = to_lset(u)
    if ell <= su.ell:
        raise InputError("successor must be longer")
    delta = ell - su.ell
    if base.name == "per":
        nodes = frozenset(y for x in su.nodes for y in (x << delta, (x << delta) | 1))
    else:
        nodes = frozenset(x << delta for x in su.nodes)
    out = LSet(ell, nodes)
    if not (base.member_fn(out) and base.prec_fn(su, out)):
        raise InputError(f"no canonical successor in base {base.name}")
    return from_lset(out)


def min_member_length(tag) -> int:
    base = get_base(tag)
    return max(0, (base.min_size - 1).bit_length())


# indexed bases

@dataclass(frozen=True)
class IndexedBase:
    """istar is a positive int or OMEGA; for OMEGA the tags repeat cyclically."""

    istar: Union[int, str]
    tags: tuple

    def __post_init__(self):
        if self.istar != OMEGA and (not isinstance(self.istar, int) or self.istar <= 0):
            raise InputError(f"bad istar {self.istar!r}")
        if not self.tags:
            raise InputError("indexed base needs at least one tag")
        if self.istar != OMEGA and len(self.tags) != self.istar:
            raise InputError("finite istar needs one tag per index")
        for t in self.tags:
            get_base(t)

    @property
    def finite(self) -> bool:
        return self.istar != OMEGA

    def tag(self, i: int) -> str:
        if self.finite and not 0 <= i < self.istar:
            raise InputError(f"index {i} outside istar {self.istar}")
        return self.tags[i % len(self.tags)]

    def base(self, i: int) -> SimpleBase:
        return get_base(self.tag(i))

    def start_iota(self) -> int:
        return self.istar if self.finite else 6

    @classmethod
    def copies(cls, iota: Union[int, str] = 6) -> "IndexedBase":
        return cls(iota, ("0",) if iota == OMEGA else ("0",) * iota)

    @classmethod
    def perfect(cls) -> "IndexedBase":
        return cls(1, ("per",))

    @classmethod
    def parse(cls, spec: str) -> "IndexedBase":
        """'per', 'omega', an int k (k copies of the singleton base), or
        'omega:t1,t2' / 't1,t2,...' for explicit tags."""
        spec = spec.strip()
        if spec == "per":
            return cls.perfect()
        if spec == OMEGA:
            return cls.copies(OMEGA)
        if spec.isdigit():
            return cls.copies(int(spec))
        if spec.startswith(OMEGA + ":"):
            return cls(OMEGA, tuple(spec[len(OMEGA) + 1:].split(",")))
        tags = tuple(spec.split(","))
        return cls(len(tags), tags)

    def to_json(self) -> dict:
        return {"istar": self.istar, "tags": list(self.tags)}

    @classmethod
    def from_json(cls, obj: dict) -> "IndexedBase":
        return cls(obj["istar"], tuple(obj["tags"]))


# finite trees

class FiniteTree:
    """Downward closure of a set of level-n nodes."""

    __slots__ = ("depth", "level_n", "_levels")

    def __init__(self, depth: int, level_n: Iterable[BitWord]):
        self.depth = depth
        self.level_n = frozenset(level_n)
        if any(w.length != depth for w in self.level_n):
            raise InputError("tree nodes must all have the tree's depth")
        self._levels: dict = {}

    @classmethod
    def from_bits(cls, depth: int, bits: Iterable[int]) -> "FiniteTree":
        return cls(depth, (BitWord(depth, b) for b in bits))

    def level_bits(self, ell: int) -> frozenset:
        if not 0 <= ell <= self.depth:
            raise InputError(f"level {ell} outside tree depth {self.depth}")
        got = self._levels.get(ell)
        if got is None:
            if ell == self.depth:
                got = frozenset(w.bits for w in self.level_n)
            else:
                up = self._levels.get(ell + 1)
                if up is None:
                    up, ell1 = self.level_bits(self.depth), self.depth
                else:
                    ell1 = ell + 1
                got = frozenset(x >> (ell1 - ell) for x in up)
            self._levels[ell] = got
        return got

    def level(self, ell: int) -> frozenset:
        return frozenset(BitWord(ell, x) for x in self.level_bits(ell))

    def nodes(self) -> frozenset:
        return frozenset(itertools.chain.from_iterable(self.level(l) for l in range(self.depth + 1)))

    def __contains__(self, w: BitWord) -> bool:
        return w.length <= self.depth and w.bits in self.level_bits(w.length)

    def restrict(self, ell: int) -> "FiniteTree":
        return FiniteTree(ell, self.level(ell))

    def is_empty(self) -> bool:
        return not self.level_n

    def __eq__(self, other) -> bool:
        return isinstance(other, FiniteTree) and self.depth == other.depth and self.level_n == other.level_n

    def __hash__(self) -> int:
        return hash((self.depth, self.level_n))

    def __repr__(self) -> str:
        return f"FiniteTree(depth={self.depth}, |level_n|={len(self.level_n)})"

    def to_json(self) -> dict:
        return {"depth": self.depth, "level_n_nodes": sorted(str(w) for w in self.level_n)}

    @classmethod
    def from_json(cls, obj: dict, depth: Optional[int] = None) -> "FiniteTree":
        d = obj.get("depth", depth)
        if d is None:
            raise InputError("tree without depth")
        return cls(d, (BitWord.parse(s) for s in obj["level_n_nodes"]))


# towers

@dataclass(frozen=True)
class TowerTrunc:
    base: str
    levels: tuple

    def __post_init__(self):
        b = get_base(self.base)
        if not self.levels:
            raise InputError("tower needs at least one level")
        ls = [to_lset(u) for u in self.levels]
        for k, s in enumerate(ls):
            if not b.member_fn(s):
                raise InputError(f"level {k} is not a member of base {b.name}")
        for k in range(len(ls) - 1):
            if not b.prec_fn(ls[k], ls[k + 1]):
                raise InputError(f"levels {k} and {k + 1} are not increasing")

    @property
    def lengths(self) -> list:
        return [next(iter(u)).length for u in self.levels]


def tower_cover(tw: TowerTrunc, n: int) -> frozenset:
    """Words of length n whose restriction to every level lies in that level."""
    last = to_lset(tw.levels[-1])
    if n < last.ell:
        raise InputError(f"cover depth {n} below last level {last.ell}")
    cands = (y for x in last.nodes for y in _extensions(x, n - last.ell))
    checks = [to_lset(u) for u in tw.levels]
    out = set()
    for y in cands:
        if all((y >> (n - s.ell)) in s.nodes for s in checks):
            out.add(BitWord(n, y))
    return frozenset(out)


def resync_towers(tws: Sequence[TowerTrunc], target_common: int) -> list:
    """Rebuild each tower from its first level, restrictions of its last
    level at shared lengths, and its last level, so that the towers share
    at least ``target_common`` lengths. Covers and first levels are kept."""
    if len(tws) < 2:
        raise InputError("need at least two towers")
    firsts = [to_lset(t.levels[0]) for t in tws]
    lasts = [to_lset(t.levels[-1]) for t in tws]
    bases = [get_base(t.base) for t in tws]
    lo = max(s.ell for s in firsts) + 1
    hi = min(s.ell for s in lasts)
    if hi - lo + 1 < target_common:
        raise CapacityError(
            f"only {max(0, hi - lo + 1)} lengths lie between the first and last levels; "
            f"towers must span at least {target_common} shared lengths"
        )
    built = [[f] for f in firsts]
    chosen = []
    for ell in range(lo, hi + 1):
        if len(chosen) == target_common:
            break
        cand = []
        for k in range(len(tws)):
            r = lasts[k].restrict(ell)
            b = bases[k]
            ok = b.member_fn(r) and b.prec_fn(built[k][-1], r) and (r == lasts[k] or b.prec_fn(r, lasts[k]))
            if not ok:
                break
            cand.append(r)
        else:
            for k, r in enumerate(cand):
                built[k].append(r)
            chosen.append(ell)
    if len(chosen) < target_common:
        raise CapacityError(f"found {len(chosen)} shared lengths, needed {target_common}; use longer towers")
    out = []
    for k, t in enumerate(tws):
        levels = built[k]
        if levels[-1] != lasts[k]:
            levels.append(lasts[k])
        out.append(TowerTrunc(t.base, tuple(from_lset(s) for s in levels)))
    return out


# certificates

@dataclass(frozen=True)
class Certificate:
    towers: tuple
    tree_pairs: tuple


def large_certificate(
    trees: Sequence[FiniteTree],
    x: BitWord,
    y: BitWord,
    ib: IndexedBase,
    depth: int,
    slice_limit: int = 6,
    budget: int = CERT_BUDGET,
) -> Optional[Certificate]:
    """Per index i, a tower whose cover sits in (t_n1 + x) and (t_n2 + y),
    covers pairwise disjoint across i. Towers have one level at ``depth``,
    which is enough at finite depth since trees are prefix closed."""
    if x.length != depth or y.length != depth or any(t.depth != depth for t in trees):
        raise InputError("x, y and trees must all have the given depth")
    count = ib.istar if ib.finite else slice_limit
    count = min(count, slice_limit)
    inter = {}
    for n1, t1 in enumerate(trees):
        a = {b ^ x.bits for b in t1.level_bits(depth)}
        for n2, t2 in enumerate(trees):
            s = a & {b ^ y.bits for b in t2.level_bits(depth)}
            if s:
                inter[(n1, n2)] = sorted(s)
    spent = 0

    def options(i):
        b = ib.base(i)
        for key, pts in inter.items():
            for combo in itertools.combinations(pts, b.min_size):
                yield key, LSet(depth, frozenset(combo))

    picks: list = []

    def search(i, used):
        nonlocal spent
        if i == count:
            return True
        b = ib.base(i)
        for key, s in options(i):
            spent += 1
            if spent > budget:
                raise BudgetExceeded(f"certificate search exceeded {budget} inspections")
            if s.nodes & used or not b.member_fn(s):
                continue
            picks.append((key, s))
            if search(i + 1, used | s.nodes):
                return True
            picks.pop()
        return False

    if not search(0, frozenset()):
        return None
    towers = tuple(TowerTrunc(ib.tag(i), (from_lset(s),)) for i, (_, s) in enumerate(picks))
    return Certificate(towers, tuple(k for k, _ in picks))


# exhaustive checks

@dataclass
class Report:
    name: str
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, clause: str, **witness) -> None:
        self.violations.append({"clause": clause, **{k: _show(v) for k, v in witness.items()}})


def _show(v):
    if isinstance(v, LSet):
        return sorted(format(x, f"0{v.ell}b") if v.ell else "" for x in v.nodes)
    return v


def enumerate_members(base: SimpleBase, ell: int, max_size: int) -> Iterator[LSet]:
    universe = range(1 << ell)
    top = min(max_size, 1 << ell)
    if base.max_member_size is not None:
        top = min(top, base.max_member_size)
    for k in range(base.min_size, top + 1):
        for combo in itertools.combinations(universe, k):
            s = LSet(ell, frozenset(combo))
            if base.member_fn(s):
                yield s


def _succ_window(base: SimpleBase, u: LSet, max_len: int, max_delta: int) -> Iterator[LSet]:
    for ell in range(u.ell + 1, min(max_len, u.ell + max_delta) + 1):
        yield from base.successors(u, ell)


def check_simple_base(tag, depth: int, max_size: int = 3, cap: int = DEPTH_CAP, max_delta: int = 2) -> Report:
    """Bounded check of the simple-base axioms.

    Members: every member of length 1..depth with at most ``max_size`` nodes.
    Partners of u: its successors up to ``max_delta`` levels above (up to
    depth + 1 for the existence clause), its translates and restrictions,
    and translated successors whose restriction differs from u.
    """
    if depth > cap:
        raise CapacityError(f"depth {depth} above exhaustive cap {cap}")
    base = get_base(tag)
    rep = Report(f"simple base {base.name} at depth {depth}")
    for ell in range(1, depth + 1):
        for u in enumerate_members(base, ell, max_size):
            if base.prec_fn(u, u):
                rep.add("order", u=u, v=u, note="reflexive")
            for rho in range(1 << ell):
                t = u.translate(rho)
                if not base.member_fn(t):
                    rep.add("c", u=u, rho=rho, note="translate not a member")
                if rho and base.prec_fn(u, t):
                    rep.add("a", u=u, v=t, note="related at equal length")
            for l2 in range(0, ell):
                r = u.restrict(l2)
                if base.member_fn(r) and base.prec_fn(u, r):
                    rep.add("a", u=u, v=r, note="related to a shorter set")
            found = False
            # wide steps only low down, where 2**(depth) translations stay cheap
            delta = max_delta if ell <= depth - 3 else 1
            window = list(_succ_window(base, u, depth, delta))
            if not any(base.prec_fn(u, v) for v in window):
                window += list(base.successors(u, ell + 1)) if ell == depth else []
            for v in window:
                if not base.prec_fn(u, v):
                    rep.add("a", u=u, v=v, note="listed successor not related")
                    continue
                found = True
                if not _restrict_exact(u, v):
                    rep.add("a", u=u, v=v, note="related but not a restriction")
                if v.ell > depth:
                    continue
                if base.prec_fn(v, u):
                    rep.add("order", u=u, v=v, note="not antisymmetric")
                for rho in range(1 << v.ell):
                    ur, vr = u.translate(rho >> (v.ell - u.ell)), v.translate(rho)
                    if not base.prec_fn(ur, vr):
                        rep.add("c", u=u, v=v, rho=rho, note="order not translation invariant")
                    elif ur != u and base.prec_fn(u, vr):
                        rep.add("a", u=u, v=vr, note="related to a set restricting elsewhere")
                for w in _succ_window(base, v, depth, 1):
                    if base.prec_fn(v, w) and not base.prec_fn(u, w):
                        rep.add("order", u=u, v=v, w=w, note="not transitive")
            if not found:
                rep.add("b", u=u, note=f"no successor up to length {depth + 1}")
    if base.name != "0" and base.name != "defect":
        rep.notes.append(
            f"members limited to at most {max_size} nodes; successors {max_delta} levels up below "
            f"length {depth - 2}, one level up above it"
        )
    return rep


def _chains(base: SimpleBase, depth: int, max_size: int, length: int, max_delta: int = 2) -> Iterator[tuple]:
    """Increasing chains of the given length inside depth: the first step
    may climb up to max_delta levels, later steps climb one level."""
    for ell in range(1, depth + 1):
        for u in enumerate_members(base, ell, max_size):
            stack = [(u,)]
            while stack:
                ch = stack.pop()
                if len(ch) == length:
                    yield ch
                    continue
                delta = max_delta if len(ch) == 1 else 1
                for v in _succ_window(base, ch[-1], depth, delta):
                    if base.prec_fn(ch[-1], v):
                        stack.append(ch + (v,))


def _one_point_extensions(v: LSet, ell: int, limit: int) -> Optional[list]:
    delta = ell - v.ell
    total = (1 << delta) ** len(v.nodes)
    if total > limit:
        return None
    nodes = sorted(v.nodes)
    return [LSet(ell, frozenset(pick)) for pick in itertools.product(*(_extensions(x, delta) for x in nodes))]


def check_nice(ib: IndexedBase, depth: int, max_size: int = 3, cap: int = DEPTH_CAP, ext_limit: int = 4096) -> Report:
    if depth > cap:
        raise CapacityError(f"depth {depth} above exhaustive cap {cap}")
    rep = Report(f"indexed base {ib.istar}:{','.join(ib.tags)} at depth {depth}")
    distinct = sorted(set(ib.tags))
    big_ok = ib.istar == OMEGA or ib.istar >= 6
    if not big_ok:
        for t in distinct:
            b = get_base(t)
            if b.max_member_size is not None and b.max_member_size < 6:
                continue
            good = True
            for ell in range(1, depth + 1):
                for u in enumerate_members(b, ell, max_size):
                    if not any(len(v.nodes) >= 6 and b.prec_fn(u, v) for v in _succ_window(b, u, depth + 1, 2)):
                        good = False
                        rep.add("i", base=t, u=u, note="no successor with 6 nodes")
                        break
                if not good:
                    break
            if good:
                big_ok = True
                break
        if not big_ok:
            rep.add("i", istar=ib.istar, note="istar < 6 and no component reaches 6-node successors")
    for t in distinct:
        b = get_base(t)
        for u, v, v1, v2 in _chains(b, depth, max_size, 4):
            for ell in range(v.ell, v1.ell + 1):
                r = v1.restrict(ell)
                if not b.member_fn(r):
                    rep.add("ii", base=t, u=u, v=v, v1=v1, v2=v2, ell=ell, note="restriction not a member")
                elif not (b.prec_fn(u, r) and b.prec_fn(r, v2)):
                    rep.add("ii", base=t, u=u, v=v, v1=v1, v2=v2, ell=ell, note="restriction breaks the order")
        for u, v in _chains(b, depth, max_size, 2, max_delta=1):
            for ell in range(v.ell + 1, depth + 1):
                exts = _one_point_extensions(v, ell, ext_limit)
                if exts is None:
                    continue
                for v1 in exts:
                    if not (b.member_fn(v1) and b.prec_fn(u, v1)):
                        rep.add("iii", base=t, u=u, v=v, v1=v1)
            for k in range(b.min_size, len(u.nodes) + 1):
                for sub in itertools.combinations(sorted(u.nodes), k):
                    u1 = LSet(u.ell, frozenset(sub))
                    if not b.member_fn(u1):
                        continue
                    shift = v.ell - u.ell
                    v1 = LSet(v.ell, frozenset(y for y in v.nodes if (y >> shift) in u1.nodes))
                    if not (b.member_fn(v1) and b.prec_fn(u1, v1)):
                        rep.add("iv", base=t, u=u, v=v, u1=u1)
    if ib.istar == OMEGA:
        # a cyclic tag pattern makes every tag recur infinitely often
        rep.notes.append("clause (v) holds symbolically: tags repeat with period %d" % len(ib.tags))
    return rep


__all__ = [
    "OMEGA",
    "LSet",
    "SimpleBase",
    "O_ZERO",
    "O_PER",
    "O_DEFECT",
    "get_base",
    "base_member",
    "base_prec",
    "canonical_member",
    "canonical_successor",
    "min_member_length",
    "IndexedBase",
    "FiniteTree",
    "TowerTrunc",
    "tower_cover",
    "resync_towers",
    "Certificate",
    "large_certificate",
    "Report",
    "enumerate_members",
    "check_simple_base",
    "check_nice",
]
