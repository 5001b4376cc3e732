"""Forcing conditions over a finite background model.

A condition is (w, n, iota, M, eta, t, r, h, g); its catalog of triples
(ell, v, m) is derived on demand. Internally words are ints of the right
length (see gf2.BitWord); pairs of labels are stored once as (a, b), a < b.

The catalog tuples use six copies of the singleton base, so each g^m_i is a
single node. For a fixed (ell, v) the admissible tuples form a product over
pairs of "six distinct nodes sigma, each with an admissible tree index", so
the catalog is handled as a list of such families. A family exists iff every
pair has at least six admissible sigma.
"""

from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from forcelab import kernels, splitrank
from forcelab.bases import (
    FiniteTree,
    IndexedBase,
    LSet,
    canonical_member,
    canonical_successor,
    min_member_length,
)
from forcelab.errors import (
    BudgetExceeded,
    InapplicableError,
    IncompatibilityRisk,
    InputError,
    PreconditionError,
    TheoremViolation,
)
from forcelab.gf2 import BitWord, extend_independent, is_independent, sumset, unique_translate
from forcelab.mstruct import Catalog, MTuple, translate_m, validate_mtuple

SIX = 6
MAX_V = 7
CATALOG_BUDGET = 10**5
DEMANDS = tuple(f"*{k}" for k in range(1, 12))
DELTA_DEMANDS = ("*12", "*13", "*14a", "*14b", "*14c", "*14d", "*15", "*16")


def _pk(a: int, b: int) -> tuple:
    if a == b:
        raise InputError(f"pair needs distinct labels, got {a} twice")
    return (a, b) if a < b else (b, a)


def _fmt(x: int, ell: int) -> str:
    return format(x, f"0{ell}b") if ell else ""


def _pos(label: int, v: Sequence[int]) -> int:
    return sorted(v).index(label)


# conditions

@dataclass(frozen=True)
class Condition:
    w: tuple
    n: int
    iota: int
    M: int
    eta: tuple  # ((label, bits), ...)
    trees: tuple  # FiniteTree per m < M
    r: tuple
    h: tuple  # per i: ((pair, m), ...)
    g: tuple  # per i: ((pair, frozenset of bits), ...)

    @classmethod
    def make(cls, w, n, iota, M, eta: Mapping, trees, r, h: Sequence[Mapping], g: Sequence[Mapping]) -> "Condition":
        """Normalize; ``trees`` may hold FiniteTree objects or level-n bit sets."""
        ts = tuple(t if isinstance(t, FiniteTree) else FiniteTree.from_bits(n, t) for t in trees)

        def norm(maps, conv):
            out = []
            for mp in maps:
                d = {}
                for (a, b), val in mp.items():
                    key = _pk(a, b)
                    val = conv(val)
                    if key in d and d[key] != val:
                        raise InputError(f"pair {key} given two different values")
                    d[key] = val
                out.append(tuple(sorted(d.items())))
            return tuple(out)

        return cls(
            tuple(sorted(set(w))),
            int(n),
            int(iota),
            int(M),
            tuple(sorted((int(a), int(x)) for a, x in eta.items())),
            ts,
            tuple(int(x) for x in r),
            norm(h, int),
            norm(g, frozenset),
        )

    @cached_property
    def eta_map(self) -> dict:
        return dict(self.eta)

    @cached_property
    def h_maps(self) -> list:
        return [dict(x) for x in self.h]

    @cached_property
    def g_maps(self) -> list:
        return [dict(x) for x in self.g]

    def eta_of(self, a: int) -> int:
        return self.eta_map[a]

    def H(self, i: int, a: int, b: int) -> int:
        return self.h_maps[i][_pk(a, b)]

    def G(self, i: int, a: int, b: int) -> frozenset:
        return self.g_maps[i][_pk(a, b)]

    def pairs(self) -> list:
        return list(itertools.combinations(self.w, 2))

    def level(self, m: int, ell: int) -> frozenset:
        return self.trees[m].level_bits(ell)

    def g_pool(self, a: int, b: int) -> frozenset:
        return frozenset().union(*(self.G(i, a, b) for i in range(self.iota)))

    def to_json(self) -> dict:
        n = self.n
        key = lambda pr: f"{pr[0]},{pr[1]}"  # noqa: E731
        return {
            "w": list(self.w),
            "n": n,
            "iota": self.iota,
            "M": self.M,
            "eta": {str(a): _fmt(x, n) for a, x in self.eta},
            "trees": [{"level_n_nodes": sorted(_fmt(x, n) for x in t.level_bits(n))} for t in self.trees],
            "r": list(self.r),
            "h": [{key(pr): m for pr, m in hi} for hi in self.h],
            "g": [{key(pr): sorted(_fmt(x, n) for x in s) for pr, s in gi} for gi in self.g],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, obj: dict) -> "Condition":
        where = "top level"
        try:
            n = int(obj["n"])

            def word(s, at):
                if not isinstance(s, str) or len(s) != n or any(c not in "01" for c in s):
                    raise InputError(f"{at}: {s!r} is not a word of length {n}")
                return int(s, 2) if s else 0

            def pair(k, at):
                a, b = k.split(",")
                return int(a), int(b)

            where = "w"
            w = [int(a) for a in obj["w"]]
            where = "eta"
            eta = {int(a): word(s, f"eta[{a}]") for a, s in obj["eta"].items()}
            where = "trees"
            trees = [[word(s, f"trees[{m}]") for s in t["level_n_nodes"]] for m, t in enumerate(obj["trees"])]
            where = "h"
            h = [{pair(k, "h"): int(m) for k, m in hi.items()} for hi in obj["h"]]
            where = "g"
            g = [{pair(k, "g"): [word(s, f"g[{i}][{k}]") for s in ss] for k, ss in gi.items()}
                 for i, gi in enumerate(obj["g"])]
            where = "r"
            r = [int(x) for x in obj["r"]]
            return cls.make(w, n, int(obj["iota"]), int(obj["M"]), eta, trees, r, h, g)
        except InputError:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise InputError(f"bad condition ({where}): {exc!r}") from None

    @classmethod
    def loads(cls, text: str) -> "Condition":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"not JSON: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise InputError("condition file must hold a JSON object")
        return cls.from_json(obj)


def infer_ib(p: Condition) -> IndexedBase:
    """Read the base of each index off the sizes of the g's: singleton-base
    members have one node, perfect-base members at least three."""
    tags = []
    for gi in p.g_maps:
        sizes = {len(s) for s in gi.values()}
        tags.append("0" if sizes <= {1} else "per")
    return IndexedBase(len(tags), tuple(tags)) if tags else IndexedBase.copies(6)


# the catalog

@dataclass(frozen=True)
class Family:
    """All catalog triples with this (ell, v); ``opts`` maps each pair of v
    to {sigma: set of admissible tree indices}. Treat as read-only."""

    ell: int
    v: tuple
    u: frozenset
    opts: tuple  # ((pair, {sigma: frozenset(h)}), ...)

    @cached_property
    def opt_map(self) -> dict:
        return dict(self.opts)

    def count(self) -> int:
        """Number of explicit triples: per pair, ordered six-tuples of
        distinct sigma weighted by the number of tree choices."""
        total = 1
        for _, o in self.opts:
            total *= math.factorial(SIX) * _elementary(sorted(len(hs) for hs in o.values()), SIX)
        return total


def _elementary(xs: list, k: int) -> int:
    e = [1] + [0] * k
    for x in xs:
        for j in range(k, 0, -1):
            e[j] += e[j - 1] * x
    return e[k]


@dataclass(frozen=True)
class CatalogEntry:
    ell: int
    v: tuple
    m: MTuple


class CatalogView:
    """Families of the catalog of p with |v| <= max_v."""

    def __init__(self, p: Condition, max_v: int = MAX_V):
        self.p = p
        self.max_v = max_v
        self._opts: dict = {}
        self._restr: dict = {}
        # per pair: sorted (r_h, h) over the distinct h_j(a, b)
        self._hs = {}
        for a, b in p.pairs():
            hs = {p.H(j, a, b) for j in range(p.iota)}
            self._hs[(a, b)] = sorted((p.r[h], h) for h in hs if 0 <= h < p.M)
        lo = min(p.r) if p.r else p.n + 1
        self.levels = range(max(1, lo), p.n + 1)

    def restr(self, ell: int) -> dict:
        got = self._restr.get(ell)
        if got is None:
            shift = self.p.n - ell
            got = {a: x >> shift for a, x in self.p.eta}
            self._restr[ell] = got
        return got

    def pair_opts(self, ell: int, a: int, b: int) -> dict:
        key = (ell,) + _pk(a, b)
        got = self._opts.get(key)
        if got is not None:
            return got
        rs = self.restr(ell)
        x, y = rs[key[1]], rs[key[2]]
        out: dict = {}
        if x != y:
            trees = self.p.trees
            levs = [(h, trees[h].level_bits(ell)) for rh, h in self._hs[key[1:]] if rh <= ell]
            out = kernels.pair_options(x, x ^ y, levs)
        self._opts[key] = out
        return out

    def family_at(self, ell: int, v: Iterable[int]) -> Optional[Family]:
        v = tuple(sorted(v))
        if len(v) < 5 or not 0 < ell <= self.p.n:
            return None
        rs = self.restr(ell)
        u = frozenset(rs[a] for a in v)
        if len(u) != len(v):
            return None
        opts = []
        for a, b in itertools.combinations(v, 2):
            o = self.pair_opts(ell, a, b)
            if len(o) < SIX:
                return None
            opts.append(((a, b), o))
        return Family(ell, v, u, tuple(opts))

    @cached_property
    def families(self) -> list:
        out = []
        w = self.p.w
        for ell in self.levels:
            adj = {a: set() for a in w}
            for a, b in itertools.combinations(w, 2):
                if len(self.pair_opts(ell, a, b)) >= SIX:
                    adj[a].add(b)
                    adj[b].add(a)
            for v in _cliques(sorted(a for a in w if len(adj[a]) >= 4), adj, 5, self.max_v):
                fam = self.family_at(ell, v)
                if fam is not None:
                    out.append(fam)
        return out

    def by_level(self) -> dict:
        out: dict = {}
        for f in self.families:
            out.setdefault(f.ell, []).append(f)
        return out


def _cliques(nodes: list, adj: dict, lo: int, hi: int) -> Iterator[tuple]:
    def rec(cl, cands):
        if len(cl) >= lo:
            yield tuple(cl)
        if len(cl) == hi:
            return
        for k, a in enumerate(cands):
            yield from rec(cl + [a], [b for b in cands[k + 1:] if b in adj[a]])

    yield from rec([], nodes)


def catalog_families(p: Condition, max_v: int = MAX_V) -> list:
    return CatalogView(p, max_v).families


def iter_entries(p: Condition, max_v: int = MAX_V) -> Iterator[CatalogEntry]:
    """Every catalog triple with |v| <= max_v. Usually astronomically many."""
    view = CatalogView(p, max_v)
    for fam in view.families:
        rs = view.restr(fam.ell)
        pairs = [pr for pr, _ in fam.opts]
        per_pair = []
        for _, o in fam.opts:
            choices = []
            for sig in itertools.permutations(sorted(o), SIX):
                for hs in itertools.product(*(sorted(o[s]) for s in sig)):
                    choices.append(tuple(zip(hs, sig)))
            per_pair.append(choices)
        for combo in itertools.product(*per_pair):
            data = {(rs[a], rs[b]): [(h, [s]) for h, s in slots] for (a, b), slots in zip(pairs, combo)}
            yield CatalogEntry(fam.ell, fam.v, MTuple.make(fam.ell, SIX, fam.u, data))


def catalog(p: Condition, budget: int = CATALOG_BUDGET, max_v: int = MAX_V) -> list:
    """Explicit catalog triples; raises BudgetExceeded when there are more
    than ``budget`` of them (check catalog_size first)."""
    size = catalog_size(p, max_v)
    if size > budget:
        raise BudgetExceeded(f"catalog has {size} triples, budget {budget}")
    return list(iter_entries(p, max_v))


def catalog_size(p: Condition, max_v: int = MAX_V) -> int:
    return sum(f.count() for f in catalog_families(p, max_v))


def check_entry(p: Condition, ell: int, v: Iterable[int], m: MTuple, cat: Optional[Catalog] = None) -> list:
    """Clauses of the catalog definition that (ell, v, m) fails."""
    bad = []
    v = tuple(sorted(v))
    n = p.n
    if not 0 < ell <= n:
        bad.append(("9a", f"level {ell} outside 1..{n}"))
        return bad
    if not set(v) <= set(p.w):
        bad.append(("9a", "v is not a subset of w"))
        return bad
    if len(v) < 5:
        bad.append(("9a", f"|v| = {len(v)} < 5"))
    rs = {a: p.eta_of(a) >> (n - ell) for a in v}
    if len(set(rs.values())) != len(v):
        bad.append(("9a", "eta restrictions collide on v"))
    cat = cat or Catalog(p.trees, IndexedBase.copies(SIX))
    rep = validate_mtuple(m, cat)
    for viol in rep.violations:
        bad.append(("9b", f"m fails clause {viol['clause']}"))
    if m.ell != ell or m.iota != SIX:
        bad.append(("9b", "m has the wrong level or iota"))
    if m.u != frozenset(rs.values()):
        bad.append(("9b", "u^m is not the restricted eta image of v"))
    if bad:
        return bad
    for a, b in itertools.combinations(v, 2):
        allowed = {p.H(j, a, b) for j in range(p.iota)}
        for i in range(SIX):
            hm = m.h(i, rs[a], rs[b])
            if p.r[hm] > ell:
                bad.append(("9c", f"r[{hm}] = {p.r[hm]} > {ell} on pair {a},{b}"))
            if hm not in allowed:
                bad.append(("9d", f"h^m_{i} = {hm} not among h_j({a},{b})"))
    return bad


# validation

@dataclass
class ConditionReport:
    violations: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    demands: tuple = DEMANDS

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, demand: str, message: str, **witness) -> None:
        self.violations.append({"demand": demand, "message": message, **witness})

    def failed(self) -> list:
        return sorted({v["demand"] for v in self.violations}, key=self.demands.index)

    def verdicts(self) -> dict:
        bad = set(self.failed())
        return {d: ("fail" if d in bad else "skipped" if d in self.skipped else "pass") for d in self.demands}


_MODELS_OK: dict = {}


def _check_model(model: splitrank.FiniteModel, labels: Iterable[int]) -> None:
    if _MODELS_OK.get(id(model)) is not model:
        rep = splitrank.validate_model(model)
        if not rep.ok:
            raise InputError(f"model rejected: {rep.violations[0]}")
        _MODELS_OK[id(model)] = model
    out = [a for a in labels if not 0 <= a < model.size]
    if out:
        raise InputError(f"labels {out} are outside the model universe of size {model.size}")


def _structure(p: Condition, ib: IndexedBase, rep: ConditionReport) -> None:
    n, w, M, iota = p.n, p.w, p.M, p.iota
    pairs = p.pairs()
    # *1
    if len(w) < 5:
        rep.add("*1", f"|w| = {len(w)} < 5")
    if n < 5:
        rep.add("*1", f"n = {n} < 5")
    if M < 5:
        rep.add("*1", f"M = {M} < 5")
    if iota < 1:
        rep.add("*1", f"iota = {iota} < 1")
    if ib.finite and iota != ib.istar:
        rep.add("*1", f"iota = {iota} but the base has istar = {ib.istar}")
    # *2
    if set(p.eta_map) != set(w):
        rep.add("*2", "eta is not indexed by w")
    # *3
    if len(p.trees) != M:
        rep.add("*3", f"{len(p.trees)} trees for M = {M}")
    for m, t in enumerate(p.trees):
        if t.depth != n:
            rep.add("*3", f"tree {m} has depth {t.depth}", m=m)
        elif t.is_empty():
            rep.add("*3", f"tree {m} is empty", m=m)
    owner: dict = {}
    for m, t in enumerate(p.trees):
        if t.depth != n:
            continue
        for x in t.level_bits(n):
            if x in owner:
                rep.add("*3", f"trees {owner[x]} and {m} share a level-n node", node=_fmt(x, n))
            owner[x] = m
    # *4
    if len(p.r) != M:
        rep.add("*4", f"{len(p.r)} r-values for M = {M}")
    for m, x in enumerate(p.r):
        if not 0 < x <= n:
            rep.add("*4", f"r[{m}] = {x} not in 1..{n}", m=m)
    # *5
    if len(p.h) != iota:
        rep.add("*5", f"{len(p.h)} h-maps for iota = {iota}")
    for i, hi in enumerate(p.h_maps):
        if set(hi) != set(pairs):
            rep.add("*5", f"h_{i} is not defined exactly on the pairs of w", i=i)
        for pr, m in hi.items():
            if not 0 <= m < M:
                rep.add("*5", f"h_{i}({pr[0]},{pr[1]}) = {m} outside M", i=i)
    # *6
    if len(p.g) != iota:
        rep.add("*6", f"{len(p.g)} g-maps for iota = {iota}")
    for i, gi in enumerate(p.g_maps):
        if set(gi) != set(pairs):
            rep.add("*6", f"g_{i} is not defined exactly on the pairs of w", i=i)
        try:
            base = ib.base(i)
        except InputError:
            rep.add("*6", f"index {i} outside the indexed base", i=i)
            continue
        for pr, s in gi.items():
            if not s or not base.member_fn(LSet(n, s)):
                rep.add("*6", f"g_{i}({pr[0]},{pr[1]}) is not in base {base.name}", i=i)
    if len(p.g) == iota and all(set(gi) == set(pairs) for gi in p.g_maps):
        for a, b in pairs:
            if len(p.g_pool(a, b)) < 6:
                rep.add("*6", f"the g's on {a},{b} cover fewer than 6 nodes")
    if rep.violations:
        # *7 and *8 need the maps well formed
        rep.skipped.extend(["*7", "*8"])
        return
    # *7
    want: dict = {m: set() for m in range(M)}
    for i in range(iota):
        for a, b in pairs:
            m = p.H(i, a, b)
            for s in p.G(i, a, b):
                want[m].add(p.eta_of(a) ^ s)
                want[m].add(p.eta_of(b) ^ s)
    for m in range(M):
        have = p.level(m, n)
        if have != want[m]:
            rep.add("*7", f"tree {m}: level n differs from the eta + g union",
                    missing=len(want[m] - have), extra=len(have - want[m]), m=m)
    # *8
    family = [p.eta_of(a) for a in w]
    for i in range(iota):
        for a, b in pairs:
            family.extend(p.G(i, a, b))
    if len(set(family)) != len(family):
        rep.add("*8", "repetition in the eta/g family")
    elif not is_independent(BitWord(n, x) for x in family):
        rep.add("*8", "the eta/g family is linearly dependent")


def validate(p: Condition, model: splitrank.FiniteModel, ib: IndexedBase, max_v: int = MAX_V) -> ConditionReport:
    """Itemized check of the eleven demands. The catalog demands quantify
    over families with |v| <= max_v."""
    _check_model(model, p.w)
    rep = ConditionReport()
    _structure(p, ib, rep)
    if rep.violations:
        rep.skipped.extend(["*9", "*10", "*11"])
        return rep
    view = CatalogView(p, max_v)
    fams = view.families
    rep.stats["families"] = len(fams)
    # *9: canonical triples checked by the independent M-tuple validator.
    # The clauses are pair-local, so a family inside a larger one at the
    # same level is covered by the larger one's triple.
    cat = Catalog(p.trees, IndexedBase.copies(SIX))
    for fam in _maximal(fams):
        ent = canonical_entry(view, fam)
        for clause, msg in check_entry(p, ent.ell, ent.v, ent.m, cat):
            rep.add("*9", f"{clause}: {msg}", ell=fam.ell, v=list(fam.v))
    _check_translations(p, view, model, rep)
    _check_splitting(p, view, model, rep)
    return rep


def _maximal(fams: list) -> list:
    by: dict = {}
    for f in fams:
        by.setdefault(f.ell, []).append(f)
    out = []
    for group in by.values():
        sets = [set(f.v) for f in group]
        for f, sv in zip(group, sets):
            if not any(len(o) > len(sv) and sv < o for o in sets):
                out.append(f)
    return out


def canonical_entry(view: CatalogView, fam: Family) -> CatalogEntry:
    rs = view.restr(fam.ell)
    data = {}
    for (a, b), o in fam.opts:
        picks = sorted(o)[:SIX]
        data[(rs[a], rs[b])] = [(min(o[s]), [s]) for s in picks]
    return CatalogEntry(fam.ell, fam.v, MTuple.make(fam.ell, SIX, fam.u, data))


def _translation_key(u: frozenset) -> tuple:
    return min(tuple(sorted(y ^ x for y in u)) for x in u)


def _translates(f0: Family, f1: Family, rho: int, view: CatalogView) -> bool:
    """Some triple of f0 translated by rho is a triple of f1."""
    rs = view.restr(f0.ell)
    back = {x: a for a, x in ((a, rs[a]) for a in f1.v)}
    o1 = f1.opt_map
    for (a, b), o in f0.opts:
        c, d = back[rs[a] ^ rho], back[rs[b] ^ rho]
        other = o1[_pk(c, d)]
        common = sum(1 for s, hs in o.items() if hs & other.get(s ^ rho, frozenset()))
        if common < SIX:
            return False
    return True


def _check_translations(p: Condition, view: CatalogView, model, rep: ConditionReport) -> None:
    pairs_checked = 0
    for ell, fams in view.by_level().items():
        groups: dict = {}
        for f in fams:
            groups.setdefault(_translation_key(f.u), []).append(f)
        rs = view.restr(ell)
        for group in groups.values():
            for f0 in group:
                x0 = min(f0.u)
                for f1 in group:
                    if len(f1.v) != len(f0.v):
                        continue
                    for y in sorted(f1.u):
                        rho = x0 ^ y
                        if (f0 is f1 and rho == 0) or frozenset(x ^ rho for x in f0.u) != f1.u:
                            continue
                        if not _translates(f0, f1, rho, view):
                            continue
                        pairs_checked += 1
                        i0 = splitrank.rank_info(f0.v, model)
                        i1 = splitrank.rank_info(f1.v, model)
                        if i0 != i1:
                            rep.add("*10", "translated triples with different rank data", ell=ell,
                                    v0=list(f0.v), v1=list(f1.v), rho=_fmt(rho, ell))
                            continue
                        k = i0[2]
                        if k is not None and rs[f0.v[k]] ^ rho != rs[f1.v[k]]:
                            rep.add("*10", "position k not carried by the translation", ell=ell,
                                    v0=list(f0.v), v1=list(f1.v), rho=_fmt(rho, ell))
    rep.stats["translation_pairs"] = pairs_checked


def _extension_possible(f0: Family, f1: Family, view: CatalogView) -> bool:
    """Some triple of f0 is strictly extended by some triple of f1."""
    l0, l1 = f0.ell, f1.ell
    r0 = view.restr(l0)
    shift = l1 - l0
    back = {r0[a]: a for a in f0.v}
    # pairs of v1 grouped by the f0 pair they restrict to
    pre: dict = {}
    o1 = f1.opt_map
    for a, b in itertools.combinations(f1.v, 2):
        c, d = back[r0[a]], back[r0[b]]
        if c != d:
            pre.setdefault(_pk(c, d), []).append(o1[(a, b)])
    for pr, o in f0.opts:
        lifts = pre[pr]
        good = 0
        for s, hs in o.items():
            ok_h = [h for h in hs if all(any(h in hs1 for s1, hs1 in ol.items() if s1 >> shift == s) for ol in lifts)]
            if ok_h:
                good += 1
                if good >= SIX:
                    break
        if good < SIX:
            return False
    return True


def _check_splitting(p: Condition, view: CatalogView, model, rep: ConditionReport) -> None:
    fams = view.families
    low = []
    for f in fams:
        rk, _, k = splitrank.rank_info(f.v, model)
        if rk is not splitrank.INF and rk == -1:
            low.append((f, k))
    checked = 0
    for f0, k in low:
        alpha = f0.v[k]
        set0 = set(f0.v)
        r0 = view.restr(f0.ell)
        for f1 in fams:
            if f1.ell <= f0.ell or not set0 <= set(f1.v):
                continue
            if {r0[a] for a in f1.v} != set(f0.u):
                continue
            shift = f1.ell - f0.ell
            above = sum(1 for x in f1.u if x >> shift == r0[alpha])
            if above == 1:
                continue
            checked += 1
            if _extension_possible(f0, f1, view):
                rep.add("*11", "a rank -1 node splits in an extending triple", ell0=f0.ell, ell1=f1.ell,
                        v0=list(f0.v), v1=list(f1.v), alpha=alpha)
    rep.stats["split_checks"] = checked


# the order

def _preceq(base, n0: int, s0: frozenset, n1: int, s1: frozenset) -> bool:
    if n0 == n1:
        return s0 == s1
    return base.member_fn(LSet(n0, s0)) and base.member_fn(LSet(n1, s1)) and base.prec_fn(LSet(n0, s0), LSet(n1, s1))


def leq(p: Condition, q: Condition, ib: Optional[IndexedBase] = None) -> bool:
    """p <= q (q is stronger). The g clause reads "equal or below" so the
    order is reflexive."""
    if not (set(p.w) <= set(q.w) and p.n <= q.n and p.M <= q.M and p.iota <= q.iota):
        return False
    if len(q.trees) < p.M or len(q.r) < p.M:
        return False
    ib = ib or infer_ib(q)
    for m in range(p.M):
        if q.trees[m].level_bits(p.n) != p.trees[m].level_bits(p.n) or p.r[m] != q.r[m]:
            return False
    shift = q.n - p.n
    for a in p.w:
        if q.eta_of(a) >> shift != p.eta_of(a):
            return False
    for i in range(p.iota):
        base = ib.base(i)
        for a, b in p.pairs():
            if q.H(i, a, b) != p.H(i, a, b):
                return False
            if not _preceq(base, p.n, p.G(i, a, b), q.n, q.G(i, a, b)):
                return False
    return True


# constructions

def _assemble(w, n, iota, M, eta: dict, g: list, h: list, r: list) -> Condition:
    levels = [set() for _ in range(M)]
    for i in range(iota):
        for (a, b), s in g[i].items():
            m = h[i][(a, b)]
            levels[m].update(eta[a] ^ x for x in s)
            levels[m].update(eta[b] ^ x for x in s)
    return Condition.make(w, n, iota, M, eta, levels, r, h, g)


def _bits(ws: Iterable[BitWord]) -> frozenset:
    return frozenset(x.bits for x in ws)


def _words(ell: int, xs: Iterable[int]) -> list:
    return [BitWord(ell, x) for x in xs]


def _successor(tag: str, ell0: int, nodes: frozenset, ell: int) -> frozenset:
    return _bits(canonical_successor(tag, _words(ell0, nodes), ell))


def _fresh_member(tag: str, ell: int) -> frozenset:
    """Canonical successor of the canonical least member, at length ell."""
    ell0 = max(1, min_member_length(tag))
    return _successor(tag, ell0, _bits(canonical_member(tag, ell0)), ell)


def _realize(slots: list, ell: int, iota: int, v: dict, anchors: dict, rng: Optional[random.Random]):
    """Lay out one node per (pair, i, sigma in v[i][pair]) and one per label
    in ``slots``, all with independent tails past ell. Returns n, eta, g."""
    enum = [(pr, i, s) for pr in sorted(v[0]) for i in range(iota) for s in sorted(v[i][pr])]
    A = len(enum)
    count = A + len(slots)
    n = ell + count
    anc = [BitWord(ell, s) for _, _, s in enum] + [anchors.get(a) for a in slots]
    rhos = extend_independent(ell, n, count, anc, rng)
    g = [{pr: set() for pr in v[0]} for _ in range(iota)]
    for (pr, i, _), rho in zip(enum, rhos):
        g[i][pr].add(rho.bits)
    eta = {a: rhos[A + k].bits for k, a in enumerate(slots)}
    return n, eta, [{pr: frozenset(s) for pr, s in gi.items()} for gi in g]


def genesis(labels: Iterable[int], ib: IndexedBase, rng: Optional[random.Random] = None) -> Condition:
    """A condition on five labels."""
    w = sorted(set(labels))
    if len(w) != 5:
        raise InputError(f"genesis takes 5 distinct labels, got {len(w)}")
    iota = ib.start_iota()
    tags = [ib.tag(i) for i in range(iota)]
    ell0 = max(1, max(min_member_length(t) for t in tags))
    ell = ell0 + 1
    top = [_successor(t, ell0, _bits(canonical_member(t, ell0)), ell) for t in tags]
    if sum(len(s) for s in top) < 6:
        raise InapplicableError("the indexed base cannot give six nodes per pair; it is not nice")
    pairs = list(itertools.combinations(w, 2))
    v = [{pr: top[i] for pr in pairs} for i in range(iota)]
    n, eta, g = _realize(w, ell, iota, v, {}, rng)
    M = len(pairs) * iota
    h = [{pr: k * iota + i for k, pr in enumerate(pairs)} for i in range(iota)]
    return _assemble(w, n, iota, M, eta, g, h, [n] * M)


def add_ordinal(p: Condition, beta: int, ib: IndexedBase, rng: Optional[random.Random] = None) -> Condition:
    """Extend p by a new label beta."""
    if beta in p.w:
        raise InputError(f"label {beta} is already in w")
    wq = sorted(p.w + (beta,))
    iota = p.iota
    ell = p.n + 1
    lo, hi = p.w[0], p.w[-1]
    v = []
    for i in range(iota):
        tag = ib.tag(i)
        vi = {}
        for a, b in itertools.combinations(wq, 2):
            src = (a, b) if beta not in (a, b) else (lo, hi)
            vi[(a, b)] = _successor(tag, p.n, p.G(i, *src), ell)
        v.append(vi)
    slots = list(p.w) + [beta]
    anchors = {a: BitWord(p.n, p.eta_of(a)) for a in p.w}
    n, eta, g = _realize(slots, ell, iota, v, anchors, rng)
    M = p.M + iota * len(p.w)
    h = []
    for i in range(iota):
        hi_ = {}
        for a, b in itertools.combinations(wq, 2):
            if beta in (a, b):
                alpha = a if b == beta else b
                hi_[(a, b)] = p.M + p.w.index(alpha) * iota + i
            else:
                hi_[(a, b)] = p.H(i, a, b)
        h.append(hi_)
    r = list(p.r) + [n] * (M - p.M)
    return _assemble(wq, n, iota, M, eta, g, h, r)


def bump_iota(p: Condition, ib: IndexedBase, rng: Optional[random.Random] = None) -> Condition:
    """Add one more index; only for istar = omega."""
    if ib.finite:
        raise InapplicableError("bump_iota is inapplicable: istar is finite")
    iota = p.iota + 1
    ell = p.n + 1
    pairs = p.pairs()
    v = []
    for i in range(iota):
        tag = ib.tag(i)
        if i < p.iota:
            v.append({pr: _successor(tag, p.n, p.G(i, *pr), ell) for pr in pairs})
        else:
            fresh = _fresh_member(tag, ell)
            v.append({pr: fresh for pr in pairs})
    anchors = {a: BitWord(p.n, p.eta_of(a)) for a in p.w}
    n, eta, g = _realize(list(p.w), ell, iota, v, anchors, rng)
    M = p.M + len(pairs)
    h = [{pr: p.H(i, *pr) for pr in pairs} for i in range(p.iota)]
    h.append({pr: p.M + k for k, pr in enumerate(pairs)})
    r = list(p.r) + [n] * (M - p.M)
    return _assemble(p.w, n, iota, M, eta, g, h, r)


# twins and amalgamation

def delta_twin(p: Condition, relabel: Mapping[int, int]) -> Condition:
    """Copy of p moved along an order-preserving relabelling that fixes a
    kernel and sends the other labels to fresh ones."""
    if set(relabel) != set(p.w):
        raise InputError("relabel must be defined exactly on w")
    img = [relabel[a] for a in p.w]
    if any(x >= y for x, y in zip(img, img[1:])):
        raise InputError("relabel is not order preserving")
    for a in p.w:
        b = relabel[a]
        if b != a and b in p.w:
            raise InputError(f"label {a} moves onto {b}, which is already in w")
    pi = dict(relabel)
    eta = {pi[a]: x for a, x in p.eta}
    h = [{(pi[a], pi[b]): m for (a, b), m in hi} for hi in p.h]
    g = [{(pi[a], pi[b]): s for (a, b), s in gi} for gi in p.g]
    return Condition.make(img, p.n, p.iota, p.M, eta, p.trees, p.r, h, g)


def _order_iso(p: Condition, q: Condition) -> dict:
    return dict(zip(p.w, q.w))


def check_delta(p: Condition, q: Condition, model: splitrank.FiniteModel, max_v: int = MAX_V) -> ConditionReport:
    """The demands on a pair from a cleaned Delta-system, p first."""
    _check_model(model, p.w + q.w)
    rep = ConditionReport(demands=DELTA_DEMANDS)
    kernel = sorted(set(p.w) & set(q.w))
    rep.stats["kernel"] = kernel
    # *12 holds for any two sets; record the kernel only
    same = len(p.w) == len(q.w) and p.n == q.n and p.iota == q.iota and p.M == q.M
    if not same:
        rep.add("*13", "|w|, n, iota or M differ")
        rep.skipped.extend(["*14a", "*14b", "*14c", "*14d", "*15", "*16"])
        return rep
    if p.trees != q.trees:
        rep.add("*13", "tree families differ")
    if p.r != q.r:
        rep.add("*13", "r-values differ")
    pi = _order_iso(p, q)
    for a in kernel:
        if pi[a] != a:
            rep.add("*14a", f"kernel label {a} is moved to {pi[a]}")
    for k in range(1, len(p.w) + 1):
        for v in itertools.combinations(p.w, k):
            i0 = splitrank.rank_info(v, model)
            i1 = splitrank.rank_info([pi[a] for a in v], model)
            if i0 != i1:
                rep.add("*14b", "rank data not preserved", v=list(v),
                        got=[splitrank.rank_to_json(i0[0]), i0[1], i0[2]],
                        image=[splitrank.rank_to_json(i1[0]), i1[1], i1[2]])
    for a in p.w:
        if p.eta_of(a) != q.eta_of(pi[a]):
            rep.add("*14c", f"eta_{a} differs from eta_{pi[a]}")
    for i in range(p.iota):
        for a, b in p.pairs():
            if p.G(i, a, b) != q.G(i, pi[a], pi[b]) or p.H(i, a, b) != q.H(i, pi[a], pi[b]):
                rep.add("*14d", f"g_{i} or h_{i} not transported on {a},{b}")
    if rep.violations:
        rep.skipped.append("*15")
    else:
        fp = {(f.ell, tuple(pi[a] for a in f.v)): {_pk(pi[a], pi[b]): o for (a, b), o in f.opts}
              for f in catalog_families(p, max_v)}
        fq = {(f.ell, f.v): f.opt_map for f in catalog_families(q, max_v)}
        if fp != fq:
            rep.add("*15", "catalogs differ under the order isomorphism",
                    only_p=len(set(fp) - set(fq)), only_q=len(set(fq) - set(fp)))
    outside = sorted(set(p.w + q.w) - set(kernel))
    for k in range(len(kernel) + 1):
        for v in itertools.combinations(kernel, k):
            for d in outside:
                s = tuple(sorted(v + (d,)))
                rk, _, kk = splitrank.rank_info(s, model)
                if rk is not splitrank.INF and rk == -1 and kk == sum(1 for a in v if a < d):
                    rep.add("*16", "rank -1 witness sits at the moving label", v=list(v), delta=d)
    return rep


def amalgamate(p: Condition, q: Condition, ib: IndexedBase, model: splitrank.FiniteModel,
               rng: Optional[random.Random] = None) -> Condition:
    """A common extension of twins p and q."""
    rep = check_delta(p, q, model)
    if not rep.ok:
        raise IncompatibilityRisk(f"pair fails {', '.join(rep.failed())}")
    return glue(p, q, ib, rng)


def glue(p: Condition, q: Condition, ib: IndexedBase, rng: Optional[random.Random] = None) -> Condition:
    """The amalgamation recipe without the Delta-system checks. The result
    need not be a condition when the checks fail."""
    if len(p.w) != len(q.w) or p.n != q.n or p.M != q.M or p.iota != q.iota:
        raise IncompatibilityRisk("twins must share |w|, n, M and iota")
    wx, wy = p.w, q.w
    only_x = [a for a in wx if a not in wy]
    only_y = [a for a in wy if a not in wx]
    w = sorted(set(wx) | set(wy))
    iota = p.iota
    ell = p.n + 1
    sx, sy = set(wx), set(wy)
    v = []
    for i in range(iota):
        tag = ib.tag(i)
        fresh = None
        vi = {}
        for a, b in itertools.combinations(w, 2):
            if a in sx and b in sx:
                vi[(a, b)] = _successor(tag, p.n, p.G(i, a, b), ell)
            elif a in sy and b in sy:
                vi[(a, b)] = _successor(tag, q.n, q.G(i, a, b), ell)
            else:
                fresh = fresh or _fresh_member(tag, ell)
                vi[(a, b)] = fresh
        v.append(vi)
    slots = list(wx) + only_y
    anchors = {a: BitWord(p.n, p.eta_of(a)) for a in wx}
    anchors.update({a: BitWord(q.n, q.eta_of(a)) for a in only_y})
    n, eta, g = _realize(slots, ell, iota, v, anchors, rng)
    M = p.M + len(only_x) ** 2
    psi = {_pk(a, b): p.M + j * len(only_y) + k for j, a in enumerate(only_x) for k, b in enumerate(only_y)}
    h = []
    for i in range(iota):
        hi_ = {}
        for a, b in itertools.combinations(w, 2):
            if a in sx and b in sx:
                hi_[(a, b)] = p.H(i, a, b)
            elif a in sy and b in sy:
                hi_[(a, b)] = q.H(i, a, b)
            else:
                hi_[(a, b)] = psi[(a, b)]
        h.append(hi_)
    r = list(p.r) + [n] * (M - p.M)
    return _assemble(w, n, iota, M, eta, g, h, r)


# recovery

def recover_membership(p: Condition, m: MTuple) -> tuple:
    """(rho, v) with (n, v, m + rho) in the catalog of p, for m at level n
    with at least five nodes."""
    n = p.n
    if m.ell != n:
        raise PreconditionError("level", f"m lives at level {m.ell}, not n = {n}")
    if len(m.u) < 5:
        raise PreconditionError("size", f"|u^m| = {len(m.u)} < 5")
    if m.iota != SIX:
        raise PreconditionError("valid", f"m has iota {m.iota}, catalog tuples use {SIX}")
    rep = validate_mtuple(m, Catalog(p.trees, IndexedBase.copies(SIX)))
    if not rep.ok:
        raise PreconditionError("valid", f"m is not a tuple over the trees of p: {rep.violations[0]}")
    etas = [BitWord(n, p.eta_of(a)) for a in p.w]
    u = m.words()
    if not sumset(u) <= sumset(etas):
        raise TheoremViolation("u^m + u^m is not inside the eta sums")
    try:
        rho = unique_translate(u, etas)
    except PreconditionError as exc:
        raise TheoremViolation(f"translate lemma inapplicable: {exc}") from None
    moved = {x.bits ^ rho.bits for x in u}
    v = tuple(a for a in p.w if p.eta_of(a) in moved)
    m2 = translate_m(m, rho)
    bad = check_entry(p, n, v, m2)
    if bad:
        raise TheoremViolation(f"recovered triple fails {bad[0][0]}: {bad[0][1]}")
    return rho, v


def harvest(p: Condition, rng: random.Random, limit: int = 20) -> list:
    """Random tuples at level n with at least five nodes, built from the
    trees alone: a translated eta-subset and, per pair, six nodes sigma with
    both translates in a common tree."""
    n = p.n
    out = []
    tries = 0
    while len(out) < limit and tries < 20 * limit:
        tries += 1
        size = rng.randint(5, min(len(p.w), MAX_V))
        v = sorted(rng.sample(p.w, size))
        rho = rng.getrandbits(n)
        nodes = {a: p.eta_of(a) ^ rho for a in v}
        data = {}
        for a, b in itertools.combinations(v, 2):
            x, y = nodes[a], nodes[b]
            opts = {}
            for mm in range(p.M):
                lev = p.level(mm, n)
                for t in lev:
                    if t ^ x ^ y in lev:
                        opts.setdefault(x ^ t, []).append(mm)
            if len(opts) < SIX:
                break
            sig = rng.sample(sorted(opts), SIX)
            data[(x, y)] = [(rng.choice(opts[s]), [s]) for s in sig]
        else:
            out.append(MTuple.make(n, SIX, nodes.values(), data))
    return out


# chains

@dataclass(frozen=True)
class ChainLimit:
    eta: dict  # label -> BitWord
    trees: tuple  # FiniteTree per m
    evidence: list  # (alpha, beta, i) where eta + g leaves the tree


def chain_limit(chain: Sequence[Condition], ib: Optional[IndexedBase] = None) -> ChainLimit:
    if not chain:
        raise InputError("empty chain")
    for k, (p, q) in enumerate(zip(chain, chain[1:])):
        if not leq(p, q, ib):
            raise InputError(f"chain is not ordered at position {k}")
    eta: dict = {}
    for p in chain:
        for a, x in p.eta:
            old = eta.get(a)
            cur = BitWord(p.n, x)
            if old is not None and not old.is_prefix_of(cur):
                raise InputError(f"eta_{a} is not coherent along the chain")
            eta[a] = cur
    trees: list = []
    for p in chain:
        for m, t in enumerate(p.trees):
            if m < len(trees):
                if t.restrict(trees[m].depth) != trees[m]:
                    raise InputError(f"tree {m} is not coherent along the chain")
                trees[m] = t
            else:
                trees.append(t)
    last = chain[-1]
    bad = []
    for i in range(last.iota):
        for a, b in last.pairs():
            lev = last.level(last.H(i, a, b), last.n)
            for x in (last.eta_of(a), last.eta_of(b)):
                if any(x ^ s not in lev for s in last.G(i, a, b)):
                    bad.append((a, b, i))
                    break
    return ChainLimit(eta, tuple(trees), bad)


__all__ = [
    "Condition",
    "ConditionReport",
    "CatalogEntry",
    "CatalogView",
    "ChainLimit",
    "Family",
    "DEMANDS",
    "DELTA_DEMANDS",
    "MAX_V",
    "infer_ib",
    "catalog",
    "catalog_families",
    "catalog_size",
    "check_entry",
    "canonical_entry",
    "iter_entries",
    "validate",
    "leq",
    "genesis",
    "add_ordinal",
    "bump_iota",
    "delta_twin",
    "check_delta",
    "amalgamate",
    "glue",
    "recover_membership",
    "harvest",
    "chain_limit",
]
