"""M-tuples over a finite tree family, strict extension and the
non-disjointness rank at finite depth.

Nodes are ints at length ``ell`` (see gf2.BitWord). Symmetric maps on
pairs are stored once per unordered pair (x, y) with x < y.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from forcelab.bases import IndexedBase, LSet, Report, get_base
from forcelab.errors import BudgetExceeded, InputError
from forcelab.gf2 import BitWord

DEFAULT_MAX_U = 6
DEFAULT_MAX_G = 4
DEFAULT_MAX_IOTA = 4
NDRK_BUDGET = 2 * 10**5
CATALOG_BUDGET = 2 * 10**5


def pair_key(x: int, y: int) -> tuple:
    if x == y:
        raise InputError("pairs need distinct nodes")
    return (x, y) if x < y else (y, x)


@dataclass(frozen=True)
class MTuple:
    """(ell, iota, u, h, g); ``entries`` holds, per pair, one (h_i, g_i) per i."""

    ell: int
    iota: int
    u: frozenset
    entries: tuple

    @classmethod
    def make(cls, ell: int, iota: int, u: Iterable[int], data: Mapping) -> "MTuple":
        """``data`` maps pairs (either orientation) to a sequence of
        (h_i, g_i) for i < iota, g_i an iterable of ints."""
        u = frozenset(u)
        norm = {}
        for (x, y), slots in data.items():
            key = pair_key(x, y)
            val = tuple((int(h), frozenset(g)) for h, g in slots)
            if key in norm and norm[key] != val:
                raise InputError(f"pair {key} given two different values")
            norm[key] = val
        return cls(ell, iota, u, tuple(sorted(norm.items())))

    @cached_property
    def table(self) -> dict:
        return dict(self.entries)

    def pairs(self) -> list:
        return [k for k, _ in self.entries]

    def h(self, i: int, x: int, y: int) -> int:
        return self.table[pair_key(x, y)][i][0]

    def g(self, i: int, x: int, y: int) -> frozenset:
        return self.table[pair_key(x, y)][i][1]

    def words(self) -> list:
        return sorted(BitWord(self.ell, x) for x in self.u)

    def __repr__(self) -> str:
        nodes = ",".join(format(x, f"0{self.ell}b") for x in sorted(self.u))
        return f"MTuple(ell={self.ell}, iota={self.iota}, u={{{nodes}}})"

    def to_json(self) -> dict:
        fmt = lambda x: format(x, f"0{self.ell}b")  # noqa: E731
        return {
            "ell": self.ell,
            "iota": self.iota,
            "u": [fmt(x) for x in sorted(self.u)],
            "pairs": {
                f"{fmt(x)},{fmt(y)}": [{"h": h, "g": [fmt(s) for s in sorted(g)]} for h, g in slots]
                for (x, y), slots in self.entries
            },
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MTuple":
        try:
            ell = int(obj["ell"])
            parse = lambda s: BitWord.parse(s).bits if len(s) == ell else _bad(s, ell)  # noqa: E731
            data = {}
            for key, slots in obj["pairs"].items():
                a, b = key.split(",")
                data[(parse(a), parse(b))] = [(s["h"], [parse(t) for t in s["g"]]) for s in slots]
            return cls.make(ell, int(obj["iota"]), [parse(s) for s in obj["u"]], data)
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise InputError(f"bad M-tuple: {exc}") from None


def _bad(s: str, ell: int):
    raise InputError(f"word {s!r} does not have length {ell}")


@dataclass(frozen=True)
class Catalog:
    """Trees t_0..t_{M-1} of common depth n plus enumeration bounds."""

    trees: tuple
    ib: IndexedBase
    max_u: int = DEFAULT_MAX_U
    max_g: int = DEFAULT_MAX_G
    max_iota: int = DEFAULT_MAX_IOTA
    _opts: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if not self.trees:
            raise InputError("catalog needs at least one tree")
        depths = {t.depth for t in self.trees}
        if len(depths) != 1:
            raise InputError(f"trees have depths {sorted(depths)}")
        object.__setattr__(self, "trees", tuple(self.trees))

    @property
    def depth(self) -> int:
        return self.trees[0].depth

    @property
    def M(self) -> int:
        return len(self.trees)

    def iotas(self) -> list:
        if self.ib.finite:
            return [self.ib.istar]
        return list(range(3, self.max_iota + 1))

    def level(self, m: int, ell: int) -> frozenset:
        return self.trees[m].level_bits(ell)

    def slot_options(self, i: int, ell: int, x: int, y: int) -> list:
        """All (h, g) for index i on pair {x, y}: g a member of base i with
        |g| <= max_g and x + s, y + s in t_h for s in g."""
        tag = self.ib.tag(i)
        key = (tag, ell) + pair_key(x, y)
        got = self._opts.get(key)
        if got is not None:
            return got
        base = get_base(tag)
        out = []
        for h in range(self.M):
            lev = self.level(h, ell)
            good = sorted(s for s in (x ^ t for t in lev) if (y ^ s) in lev)
            top = min(self.max_g, len(good))
            if base.max_member_size is not None:
                top = min(top, base.max_member_size)
            for k in range(max(1, base.min_size), top + 1):
                for combo in itertools.combinations(good, k):
                    g = frozenset(combo)
                    if base.member_fn(LSet(ell, g)):
                        out.append((h, g))
        self._opts[key] = out
        return out

    def pair_options(self, iota: int, ell: int, x: int, y: int, fixed: Sequence = ()) -> Iterator[tuple]:
        """Full per-pair values (one (h, g) per i) with pairwise disjoint g's.
        ``fixed`` pins a prefix of the slots to given candidate lists."""
        lists = []
        for i in range(iota):
            lists.append(fixed[i] if i < len(fixed) else self.slot_options(i, ell, x, y))

        def rec(i, used, acc):
            if i == iota:
                yield tuple(acc)
                return
            for h, g in lists[i]:
                if used.isdisjoint(g):
                    acc.append((h, g))
                    yield from rec(i + 1, used | g, acc)
                    acc.pop()

        yield from rec(0, frozenset(), [])


def default_ib_for(iota: int) -> IndexedBase:
    return IndexedBase.copies(iota)


def validate_mtuple(m: MTuple, cat: Catalog) -> Report:
    rep = Report("mtuple")
    ell, u = m.ell, m.u
    if not 0 < ell:
        rep.add("a", reason="ell must be positive", ell=ell)
    if len(u) < 2:
        rep.add("a", reason="u needs two nodes", size=len(u))
    if any(not 0 <= x < (1 << max(ell, 0)) for x in u):
        rep.add("a", reason="node outside 2^ell")
    if cat.ib.finite:
        if m.iota != cat.ib.istar:
            rep.add("a", reason="iota differs from istar", iota=m.iota)
    elif m.iota < 3:
        rep.add("a", reason="iota below 3 for omega base", iota=m.iota)
    want = {pair_key(x, y) for x, y in itertools.combinations(u, 2)}
    have = set(m.table)
    if want != have:
        rep.add("b", reason="maps are not defined exactly on pairs of u",
                missing=len(want - have), extra=len(have - want))
    if ell > cat.depth:
        rep.add("depth", ell=ell, n=cat.depth)
    if rep.violations:
        return rep
    bases = [cat.ib.base(i) for i in range(m.iota)]
    for (x, y), slots in m.entries:
        if len(slots) != m.iota:
            rep.add("b", reason="wrong number of slots", pair=_fmt_pair(m, x, y))
            continue
        for i, (h, g) in enumerate(slots):
            if not g or any(not 0 <= s < (1 << ell) for s in g):
                rep.add("b", reason="g not a level set at ell", pair=_fmt_pair(m, x, y), i=i)
                continue
            if i >= len(bases) or not bases[i].member_fn(LSet(ell, g)):
                rep.add("b", reason="g not in base", pair=_fmt_pair(m, x, y), i=i)
            if not isinstance(h, int) or h < 0:
                rep.add("d", pair=_fmt_pair(m, x, y), i=i, h=h)
                continue
            if h >= cat.M:
                rep.add("range", pair=_fmt_pair(m, x, y), i=i, h=h, M=cat.M)
                continue
            lev = cat.level(h, ell)
            for s in sorted(g):
                for node in (x, y):
                    if node ^ s not in lev:
                        rep.add("e", pair=_fmt_pair(m, x, y), i=i, sigma=format(s, f"0{ell}b"), h=h)
        for i, j in itertools.combinations(range(len(slots)), 2):
            if slots[i][1] & slots[j][1]:
                rep.add("c", pair=_fmt_pair(m, x, y), i=i, j=j)
    return rep


def _fmt_pair(m: MTuple, x: int, y: int) -> str:
    return f"{x:0{m.ell}b},{y:0{m.ell}b}"


def translate_m(m: MTuple, rho: BitWord) -> MTuple:
    if rho.length < m.ell:
        raise InputError(f"rho of length {rho.length} shorter than ell {m.ell}")
    r = rho.bits >> (rho.length - m.ell)
    data = {
        (x ^ r, y ^ r): [(h, frozenset(s ^ r for s in g)) for h, g in slots]
        for (x, y), slots in m.entries
    }
    return MTuple.make(m.ell, m.iota, (x ^ r for x in m.u), data)


def restrict_m(m: MTuple, sub: Iterable[int]) -> MTuple:
    sub = frozenset(sub)
    if not sub <= m.u:
        raise InputError("u' is not a subset of u")
    if len(sub) < 2:
        raise InputError("u' needs at least two nodes")
    data = {k: v for k, v in m.entries if k[0] in sub and k[1] in sub}
    return MTuple.make(m.ell, m.iota, sub, data)


def extends(m: MTuple, n: MTuple, ib: Optional[IndexedBase] = None) -> bool:
    """n strictly extends m."""
    if not (m.ell < n.ell and m.iota <= n.iota):
        return False
    shift = n.ell - m.ell
    if frozenset(x >> shift for x in n.u) != m.u:
        return False
    ib = ib or default_ib_for(max(n.iota, 1))
    bases = [ib.base(i) for i in range(m.iota)]
    small_table = m.table
    for (x, y), slots in n.entries:
        a, b = x >> shift, y >> shift
        if a == b:
            continue
        small = small_table.get((a, b) if a < b else (b, a))
        if small is None:
            return False
        for i, base in enumerate(bases):
            hm, gm = small[i]
            hn, gn = slots[i]
            if hm != hn:
                return False
            lm, ln = LSet(m.ell, gm), LSet(n.ell, gn)
            if not (base.member_fn(lm) and base.member_fn(ln) and base.prec_fn(lm, ln)):
                return False
    return True


# enumeration

def _cliques(nodes: list, adj: dict, max_size: int) -> Iterator[tuple]:
    def rec(clique, cands):
        if len(clique) >= 2:
            yield tuple(clique)
        if len(clique) == max_size:
            return
        for k, v in enumerate(cands):
            yield from rec(clique + [v], [w for w in cands[k + 1:] if w in adj[v]])

    yield from rec([], nodes)


def _assign(pairs: list, option_lists: list) -> Iterator[dict]:
    for combo in itertools.product(*option_lists):
        yield dict(zip(pairs, combo))


def enumerate_catalog(cat: Catalog, budget: int = CATALOG_BUDGET, levels: Optional[Iterable[int]] = None) -> list:
    """Every valid tuple within the bounds, in canonical order."""
    out = []
    for ell in (levels if levels is not None else range(1, cat.depth + 1)):
        for iota in cat.iotas():
            opts_cache = {}

            def opts(x, y):
                key = pair_key(x, y)
                if key not in opts_cache:
                    opts_cache[key] = list(cat.pair_options(iota, ell, *key))
                return opts_cache[key]

            nodes = list(range(1 << ell))
            # x ~ y iff the pair admits some value
            diffs = set()
            for d in range(1, 1 << ell):
                if opts(0, d):
                    diffs.add(d)
            adj = {x: {y for y in nodes if y != x and (x ^ y) in diffs and opts(x, y)} for x in nodes}
            for u in _cliques(nodes, adj, cat.max_u):
                pairs = list(itertools.combinations(u, 2))
                lists = [opts(x, y) for x, y in pairs]
                size = 1
                for lst in lists:
                    size *= len(lst)
                if len(out) + size > budget:
                    raise BudgetExceeded(f"catalog enumeration exceeds budget {budget}")
                for data in _assign(pairs, lists):
                    out.append(MTuple.make(ell, iota, u, data))
    return out


def _one_step_extensions(m: MTuple, nu: int, cat: Catalog) -> Iterator[MTuple]:
    """Extensions n of m with nu split into exactly two nodes and every other
    node of u extended once; for omega bases iota grows."""
    if len(m.u) + 1 > cat.max_u:
        return
    iotas = [m.iota] if cat.ib.finite else [k for k in cat.iotas() if k > m.iota]
    counts = {x: (2 if x == nu else 1) for x in m.u}
    for ell in range(m.ell + 1, cat.depth + 1):
        for iota in iotas:
            yield from _grow(m, ell, iota, counts, cat)


def all_extensions(m: MTuple, cat: Catalog) -> Iterator[MTuple]:
    """Every n in the catalog with m strictly below n."""
    iotas = [m.iota] if cat.ib.finite else [k for k in cat.iotas() if k >= m.iota]
    parents = sorted(m.u)
    for ell in range(m.ell + 1, cat.depth + 1):
        room = 1 << (ell - m.ell)
        for cs in itertools.product(range(1, room + 1), repeat=len(parents)):
            if sum(cs) > cat.max_u:
                continue
            for iota in iotas:
                yield from _grow(m, ell, iota, dict(zip(parents, cs)), cat)


def _grow(m: MTuple, ell: int, iota: int, counts: dict, cat: Catalog) -> Iterator[MTuple]:
    """Tuples at ell over m with counts[x] children for each x in u^m."""
    shift = ell - m.ell
    mask = (1 << shift) - 1
    plan = [x for x in sorted(counts) for _ in range(counts[x])]
    cache: dict = {}

    def options(x, y):
        key = pair_key(x, y)
        got = cache.get(key)
        if got is None:
            got = _pair_opts(m, ell, iota, key[0], key[1], shift, cat)
            cache[key] = got
        return got

    def rec(k, chosen, lists, pairs):
        if k == len(plan):
            for data in _assign(pairs, lists):
                yield MTuple.make(ell, iota, chosen, data)
            return
        parent = plan[k]
        lo = 0
        if k and plan[k - 1] == parent:
            lo = (chosen[-1] & mask) + 1
        for t in range(lo, mask + 1):
            c = (parent << shift) | t
            new_lists, new_pairs = [], []
            for x in chosen:
                opts = options(x, c)
                if not opts:
                    break
                new_lists.append(opts)
                new_pairs.append((x, c))
            else:
                yield from rec(k + 1, chosen + [c], lists + new_lists, pairs + new_pairs)

    yield from rec(0, [], [], [])


def _pair_opts(m: MTuple, ell: int, iota: int, x: int, y: int, shift: int, cat: Catalog) -> list:
    a, b = x >> shift, y >> shift
    if a == b:
        return list(cat.pair_options(iota, ell, x, y))
    small = m.table[pair_key(a, b)]
    fixed = []
    for i in range(m.iota):
        hm, gm = small[i]
        base = cat.ib.base(i)
        lm = LSet(m.ell, gm)
        fixed.append([(h, g) for h, g in cat.slot_options(i, ell, x, y)
                      if h == hm and base.prec_fn(lm, LSet(ell, g))])
    return list(cat.pair_options(iota, ell, x, y, fixed))


class NdrkEngine:
    """Memoized ndrk over one catalog."""

    def __init__(self, cat: Catalog, budget: int = NDRK_BUDGET):
        self.cat = cat
        self.budget = budget
        self.memo: dict = {}
        self.visited = 0

    def ndrk(self, m: MTuple) -> int:
        got = self.memo.get(m)
        if got is not None:
            return got
        self.visited += 1
        if self.visited > self.budget:
            raise BudgetExceeded(f"ndrk search exceeds budget {self.budget}")
        # each step adds a level and a node
        cap = min(self.cat.depth - m.ell, self.cat.max_u - len(m.u))
        best = None
        for nu in sorted(m.u):
            top = 0
            for n in _one_step_extensions(m, nu, self.cat):
                top = max(top, self.ndrk(n) + 1)
                if top >= cap:
                    break
            best = top if best is None else min(best, top)
            if best == 0:
                break
        self.memo[m] = best
        return best


def ndrk(m: MTuple, cat: Catalog, budget: int = NDRK_BUDGET) -> int:
    rep = validate_mtuple(m, cat)
    if not rep.ok:
        raise InputError(f"tuple not in catalog: {rep.violations[0]}")
    return NdrkEngine(cat, budget).ndrk(m)


def derivative_chain(cat: Catalog, budget: int = CATALOG_BUDGET, members: Optional[list] = None) -> list:
    """D_0, D_1, ... as sets of tuples, stopping at the first empty or
    repeated stage. Uses every extension in the enumerated catalog."""
    d0 = members if members is not None else enumerate_catalog(cat, budget)
    # Index each n under every (level, projected u, projected h and g) it
    # could extend. Matching the index is necessary for extension in both
    # bases; extends() still decides.
    below: dict = {}
    for t in d0:
        for ell in range(1, t.ell):
            for k in ([t.iota] if cat.ib.finite else range(3, t.iota + 1)):
                sig = _projection(t, ell, k)
                if sig is not None:
                    below.setdefault(sig, []).append(t)
    # ext[m][nu] = tuples n extending m in which nu has two successors
    ib = cat.ib
    ext = {}
    for m in d0:
        per_nu = {nu: [] for nu in m.u}
        for n in below.get((m.ell, m.iota, m.u, m.entries), ()):
            if not ib.finite and not m.iota < n.iota:
                continue
            if not extends(m, n, ib):
                continue
            shift = n.ell - m.ell
            counts: dict = {}
            for x in n.u:
                counts[x >> shift] = counts.get(x >> shift, 0) + 1
            for nu, c in counts.items():
                if c >= 2:
                    per_nu[nu].append(n)
        ext[m] = per_nu
    chain = [frozenset(d0)]
    while True:
        prev = chain[-1]
        # the literal successor clause over all of D_0; monotonicity is tested, not assumed
        nxt = frozenset(m for m in d0 if all(any(n in prev for n in ns) for ns in ext[m].values()))
        if nxt == prev:
            break
        chain.append(nxt)
        if not nxt:
            break
    return chain


def cone(m: MTuple, cat: Catalog, budget: int = CATALOG_BUDGET) -> list:
    """m together with everything above it; upward closed, so the derivative
    stages computed inside it agree with those of the whole catalog."""
    out = [m]
    seen = {m}
    frontier = [m]
    while frontier:
        nxt = []
        for t in frontier:
            for n in all_extensions(t, cat):
                if n not in seen:
                    seen.add(n)
                    out.append(n)
                    nxt.append(n)
                    if len(out) > budget:
                        raise BudgetExceeded(f"cone exceeds budget {budget}")
        frontier = nxt
    return out


def _projection(n: MTuple, ell: int, k: int):
    shift = n.ell - ell
    proj: dict = {}
    for (x, y), slots in n.entries:
        a, b = x >> shift, y >> shift
        if a == b:
            continue
        val = tuple((h, frozenset(s >> shift for s in g)) for h, g in slots[:k])
        key = (a, b) if a < b else (b, a)
        if proj.setdefault(key, val) != val:
            return None
    u = frozenset(x >> shift for x in n.u)
    if len(proj) != len(u) * (len(u) - 1) // 2:
        return None
    return (ell, k, u, tuple(sorted(proj.items())))


def ndrk_from_chain(m: MTuple, chain: list) -> int:
    k = 0
    while k + 1 < len(chain) and m in chain[k + 1]:
        k += 1
    return k


__all__ = [
    "MTuple",
    "Catalog",
    "pair_key",
    "validate_mtuple",
    "translate_m",
    "restrict_m",
    "extends",
    "enumerate_catalog",
    "NdrkEngine",
    "ndrk",
    "derivative_chain",
    "all_extensions",
    "cone",
    "ndrk_from_chain",
]
