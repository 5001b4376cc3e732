"""Seeded property campaigns.

Each trial draws from its own generator seeded with trial_seed(seed, t), so
a failing trial can be replayed alone. ``plant`` switches in a deliberately
broken component to check that the harness notices.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from forcelab import forcing, splitrank
from forcelab.bases import IndexedBase
from forcelab.errors import LabError, PreconditionError
from forcelab.gf2 import BitWord, brute_force_translate, unique_translate
from forcelab.mstruct import translate_m

CAMPAIGNS = ("litlem", "ranks", "forcing", "amalg", "recover")
LITLEM_LENGTHS = (5, 6, 7, 8)


def trial_seed(seed: int, t: int) -> int:
    return seed * 1_000_003 + t


@dataclass
class Summary:
    campaign: str
    trials: int
    seed: int
    violations: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def bump(self, key: str, by: int = 1) -> None:
        self.counts[key] = self.counts.get(key, 0) + by

    def fail(self, t: int, message: str, **extra) -> None:
        self.violations.append({"trial": t, "seed": trial_seed(self.seed, t), "message": message, **extra})

    def to_json(self) -> dict:
        return {
            "campaign": self.campaign,
            "trials": self.trials,
            "seed": self.seed,
            "ok": self.ok,
            "counts": dict(sorted(self.counts.items())),
            "violations": self.violations,
        }


# translate lemma

def _independent_ref(xs: list) -> bool:
    # no nonempty subset sums to zero
    return all(
        _xor(c) != 0
        for k in range(1, len(xs) + 1)
        for c in itertools.combinations(xs, k)
    )


def _xor(xs) -> int:
    out = 0
    for x in xs:
        out ^= x
    return out


def _sums(xs) -> set:
    return {a ^ b for a in xs for b in xs}


def _random_independent(rng: random.Random, ell: int, k: int) -> list:
    while True:
        xs = rng.sample(range(1, 1 << ell), k)
        if _independent_ref(xs):
            return xs


def litlem_instance(rng: random.Random, ell: int) -> tuple:
    """(A, B) as int lists: mostly planted translates, some noise."""
    kind = rng.random()
    k = rng.randint(5, ell)
    B = _random_independent(rng, ell, k)
    if kind < 0.6:
        S = rng.sample(B, rng.randint(5, k))
    elif kind < 0.75:
        S = rng.sample(B, 4)
    elif kind < 0.9:
        return rng.sample(range(1 << ell), rng.randint(3, 7)), B
    else:
        B = rng.sample(range(1 << ell), k)
        S = rng.sample(B, 5)
    x = rng.getrandbits(ell)
    return [s ^ x for s in S], B


def _buggy_translate(A, B):
    # skips the precondition checks
    A = sorted(A)
    bset = {b.bits for b in B}
    for b in sorted(bset):
        x = A[0].bits ^ b
        if all(a.bits ^ x in bset for a in A):
            return BitWord(A[0].length, x)
    return BitWord(A[0].length, 0)


def litlem(trials: int, seed: int, plant: bool = False, lengths=LITLEM_LENGTHS) -> Summary:
    """unique_translate against the brute-force scan."""
    out = Summary("litlem", trials, seed)
    solve = _buggy_translate if plant else unique_translate
    for t in range(trials):
        rng = random.Random(trial_seed(seed, t))
        for ell in lengths:
            A, B = litlem_instance(rng, ell)
            pre = len(set(A)) >= 5 and _independent_ref(B) and _sums(A) <= _sums(B)
            Aw = [BitWord(ell, a) for a in A]
            Bw = [BitWord(ell, b) for b in B]
            brute = {x.bits for x in brute_force_translate(Aw, Bw)}
            try:
                got = solve(Aw, Bw).bits
            except PreconditionError:
                got = None
            if pre:
                out.bump("preconditions_hold")
                if brute != {got}:
                    out.fail(t, "translate disagrees with the scan", ell=ell, got=got, brute=sorted(brute))
            else:
                out.bump("preconditions_fail")
                if got is not None:
                    out.fail(t, "translate answered outside its preconditions", ell=ell)
    return out


# splitting rank

def random_model(rng: random.Random, max_size: int = 6, max_rels: int = 3) -> splitrank.FiniteModel:
    size = rng.randint(2, max_size)
    rels = []
    for z in range(rng.randint(0, max_rels)):
        arity = rng.randint(1, min(3, size))
        pool = list(itertools.combinations(range(size), arity))
        rels.append(splitrank.Relation(z, arity, frozenset(rng.sample(pool, rng.randint(0, len(pool))))))
    return splitrank.FiniteModel(size, rng.choice([2, 3]), tuple(rels))


def witness_holds(eng: splitrank.RankEngine, w) -> bool:
    """Re-check a witness by enumerating substitutes."""
    m = eng.model
    wt = eng.witness(w)
    a = wt.v
    rel = [r for r in m.relations_of_arity(len(a)) if r.zeta == wt.zeta]
    if not rel or a not in rel[0].tuples:
        return False
    subs = [x for x in range(m.size) if a[: wt.k] + (x,) + a[wt.k + 1:] in rel[0].tuples]
    if wt.rk == -1:
        return len(subs) < m.theta
    return all(x in a or not splitrank.rank_at_least(eng.rank(set(a) | {x}), wt.rk) for x in subs)


def ranks(trials: int, seed: int, plant: bool = False) -> Summary:
    """Memoized rank against the literal stage clauses on random models."""
    out = Summary("ranks", trials, seed)
    for t in range(trials):
        rng = random.Random(trial_seed(seed, t))
        model = random_model(rng)
        eng = splitrank.RankEngine(model)
        for k in range(1, model.size + 1):
            for w in itertools.combinations(range(model.size), k):
                r = eng.rank(w)
                if plant and r is not splitrank.INF:
                    r = r + 1
                out.bump("sets")
                if r != splitrank.reference_rank(w, model):
                    out.fail(t, "rank differs from the reference", w=list(w))
                    continue
                if r is not splitrank.INF:
                    out.bump("witnesses")
                    if not witness_holds(eng, w):
                        out.fail(t, "witness does not re-verify", w=list(w))
    return out


# constructions

def _flip_eta(p: forcing.Condition) -> forcing.Condition:
    a, x = p.eta[0]
    eta = dict(p.eta)
    eta[a] = x ^ 1
    return forcing.Condition(p.w, p.n, p.iota, p.M, tuple(sorted(eta.items())), p.trees, p.r, p.h, p.g)


_BASES = ("omega", "6")


def forcing_campaign(trials: int, seed: int, plant: bool = False,
                     model: Optional[splitrank.FiniteModel] = None) -> Summary:
    """genesis, add_ordinal and bump_iota outputs validate and extend."""
    model = model or splitrank.bundled_model()
    out = Summary("forcing", trials, seed)
    omega = IndexedBase.parse("omega")
    for t in range(trials):
        rng = random.Random(trial_seed(seed, t))
        ib = IndexedBase.parse(_BASES[t % len(_BASES)])
        labels = sorted(rng.sample(range(model.size), 5))
        fresh = rng.choice([x for x in range(model.size) if x not in labels])

        def check(kind, q, ib_, below=None):
            if plant:
                q = _flip_eta(q)
            rep = forcing.validate(q, model, ib_)
            out.bump(kind)
            if not rep.ok:
                out.fail(t, f"{kind} output fails {', '.join(rep.failed())}", base=ib_.istar)
            if below is not None and not forcing.leq(below, q, ib_):
                out.fail(t, f"{kind} output does not extend its input", base=ib_.istar)

        try:
            p = forcing.genesis(labels, ib, rng)
            check("genesis", p, ib)
            check("add_ordinal", forcing.add_ordinal(p, fresh, ib, rng), ib, p)
            if ib.istar != "omega":
                p = forcing.genesis(labels, omega, rng)
            check("bump_iota", forcing.bump_iota(p, omega, rng), omega, p)
        except LabError as exc:
            out.fail(t, f"construction raised {type(exc).__name__}: {exc}")
    return out


# twins

def thick_pairs(model_blocks: Optional[list] = None) -> list:
    """(low, high) for each two-element block of the bundled model."""
    blocks = model_blocks or splitrank.default_blocks()
    return [b for b in blocks if len(b) == 2]


KERNEL_SIZES = (0, 2, 3)


def twin_pair(rng: random.Random, kernel_size: int, ib: IndexedBase, extend: bool = False) -> tuple:
    """A condition and a twin of it moved inside the thick blocks, with the
    given kernel size. The moved labels are block lows sent to their highs,
    an automorphism of the bundled model."""
    size = 6 if extend else 5
    thick = thick_pairs()
    moving = rng.sample(thick, size - kernel_size)
    taken = {x for b in moving for x in b}
    pool = [x for x in range(sum(map(len, splitrank.default_blocks()))) if x not in taken]
    kernel = rng.sample(pool, kernel_size)
    w = sorted([lo for lo, _ in moving] + kernel)
    base_w = w[:5] if not extend else [a for a in w if a != max(x for x in w)]
    p = forcing.genesis(base_w, ib, rng)
    if extend:
        p = forcing.add_ordinal(p, max(w), ib, rng)
    low_to_high = {lo: hi for lo, hi in moving}
    relabel = {a: low_to_high.get(a, a) for a in p.w}
    return p, forcing.delta_twin(p, relabel), sorted(kernel)


def amalg_campaign(trials: int, seed: int, plant: bool = False,
                   model: Optional[splitrank.FiniteModel] = None) -> Summary:
    """Twins pass the Delta demands; their amalgamation validates, extends
    both, and has the predicted M."""
    model = model or splitrank.bundled_model()
    out = Summary("amalg", trials, seed)
    for t in range(trials):
        rng = random.Random(trial_seed(seed, t))
        k = KERNEL_SIZES[t % len(KERNEL_SIZES)]
        ib = IndexedBase.parse("6" if t % 2 == 0 else "omega")
        extend = k == 3 and t % 4 == 1
        try:
            p, q, kernel = twin_pair(rng, k, ib, extend)
            if plant:
                q = _flip_eta(q)
            rep = forcing.check_delta(p, q, model)
            out.bump(f"kernel_{k}")
            if not rep.ok:
                out.fail(t, f"twins fail {', '.join(rep.failed())}", kernel=kernel)
                continue
            r = forcing.amalgamate(p, q, ib, model, rng)
            vr = forcing.validate(r, model, ib)
            if not vr.ok:
                out.fail(t, f"amalgamation fails {', '.join(vr.failed())}", kernel=kernel)
            if not (forcing.leq(p, r, ib) and forcing.leq(q, r, ib)):
                out.fail(t, "amalgamation does not extend both twins", kernel=kernel)
            d = len(set(p.w) - set(q.w))
            if r.M != p.M + d * d:
                out.fail(t, f"M = {r.M}, expected {p.M + d * d}", kernel=kernel)
        except LabError as exc:
            out.fail(t, f"raised {type(exc).__name__}: {exc}")
    return out


# recovery

def corpus(size: int, seed: int, model: Optional[splitrank.FiniteModel] = None) -> list:
    """Seeded mix of constructed conditions (genesis, extensions,
    amalgamations) with their bases."""
    model = model or splitrank.bundled_model()
    rng = random.Random(seed)
    out = []
    kinds = ("genesis", "add", "bump", "amalg")
    omega = IndexedBase.parse("omega")
    while len(out) < size:
        kind = kinds[len(out) % len(kinds)]
        ib = IndexedBase.parse(rng.choice(_BASES)) if kind != "bump" else omega
        labels = sorted(rng.sample(range(model.size), 5))
        if kind == "amalg":
            p, q, _ = twin_pair(rng, rng.choice(KERNEL_SIZES), ib)
            c = forcing.amalgamate(p, q, ib, model, rng)
        else:
            c = forcing.genesis(labels, ib, rng)
            if kind == "add":
                c = forcing.add_ordinal(c, rng.choice([x for x in range(model.size) if x not in labels]), ib, rng)
            elif kind == "bump":
                c = forcing.bump_iota(c, ib, rng)
        out.append((kind, ib, c))
    return out


def recover_campaign(trials: int, seed: int, plant: bool = False, per_condition: int = 20,
                     model: Optional[splitrank.FiniteModel] = None) -> Summary:
    """Recovery on harvested tuples never trips the alarm."""
    out = Summary("recover", trials, seed)
    for t, (kind, ib, p) in enumerate(corpus(trials, seed, model)):
        rng = random.Random(trial_seed(seed, t))
        for m in forcing.harvest(p, rng, per_condition):
            out.bump("tuples")
            try:
                rho, v = forcing.recover_membership(p, m)
                if plant:
                    v = v[1:]
                bad = forcing.check_entry(p, p.n, v, translate_m(m, rho))
                if bad:
                    out.fail(t, f"recovered triple fails {bad[0][0]}", kind=kind)
            except LabError as exc:
                out.fail(t, f"{type(exc).__name__}: {exc}", kind=kind)
    return out


RUNNERS: dict = {
    "litlem": litlem,
    "ranks": ranks,
    "forcing": forcing_campaign,
    "amalg": amalg_campaign,
    "recover": recover_campaign,
}


def run(campaign: str, trials: int, seed: int, plant: bool = False) -> Summary:
    fn: Callable = RUNNERS[campaign]
    return fn(trials, seed, plant=plant)


__all__ = [
    "CAMPAIGNS",
    "Summary",
    "trial_seed",
    "litlem_instance",
    "litlem",
    "random_model",
    "witness_holds",
    "ranks",
    "forcing_campaign",
    "thick_pairs",
    "twin_pair",
    "amalg_campaign",
    "corpus",
    "recover_campaign",
    "run",
]
