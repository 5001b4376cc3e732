"""Command-line front end.

Exit codes: 0 ok, 1 a demand or property failed, 2 bad input, 3 budget or
capacity exceeded.
"""

from __future__ import annotations

import functools
import json
import random
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import click

from forcelab import forcing, mstruct, splitrank, stress
from forcelab.bases import FiniteTree, IndexedBase, check_nice, check_simple_base
from forcelab.errors import (
    BudgetExceeded,
    CapacityError,
    InputError,
    InternalInconsistency,
    ModelInconsistency,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3

DEFAULT_TRIALS = {"litlem": 1000, "ranks": 1000, "forcing": 20, "amalg": 10, "recover": 10}


@dataclass
class RunConfig:
    seed: int
    budget: Optional[int]
    fmt: str
    model_path: Optional[str]
    base_spec: str

    def model(self) -> splitrank.FiniteModel:
        if self.model_path is None:
            return splitrank.bundled_model()
        obj = read_json(self.model_path)
        model = splitrank.FiniteModel.from_json(obj, name=self.model_path)
        rep = splitrank.validate_model(model)
        if not rep.ok:
            raise InputError(f"{self.model_path}: {rep.violations[0]}")
        return model

    def ib(self) -> IndexedBase:
        try:
            return IndexedBase.parse(self.base_spec)
        except (InputError, ValueError) as exc:
            raise InputError(f"bad --base {self.base_spec!r}: {exc}") from None

    def rng(self) -> random.Random:
        return random.Random(self.seed)


def read_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def read_condition(path: str) -> forcing.Condition:
    obj = read_json(path)
    if not isinstance(obj, dict):
        raise InputError(f"{path}: expected a JSON object")
    try:
        return forcing.Condition.from_json(obj)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from None


def read_trees(path: str) -> tuple:
    """Trees from a condition file or from {"depth"?, "trees": [...]}."""
    obj = read_json(path)
    if isinstance(obj, dict) and "eta" in obj:
        return read_condition(path).trees
    try:
        items = obj["trees"]
        depth = obj.get("depth") or len(items[0]["level_n_nodes"][0])
        return tuple(FiniteTree.from_json(t, depth) for t in items)
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: bad tree file ({exc!r})") from None


def parse_ints(text: str, what: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"{what} must be comma-separated integers, got {text!r}") from None


def emit(cfg: RunConfig, obj, lines: list) -> None:
    if cfg.fmt == "json":
        click.echo(json.dumps(obj, sort_keys=True, indent=1))
    else:
        for line in lines:
            click.echo(line)


def guarded(fn):
    """Map library errors onto the exit-code contract."""

    @functools.wraps(fn)
    def inner(*args, **kwargs):
        try:
            code = fn(*args, **kwargs)
        except (BudgetExceeded, CapacityError) as exc:
            click.echo(f"budget: {exc}", err=True)
            sys.exit(EXIT_BUDGET)
        except InputError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INPUT)
        except (InternalInconsistency, ModelInconsistency) as exc:
            click.echo(f"failure: {type(exc).__name__}: {exc}", err=True)
            sys.exit(EXIT_FAIL)
        sys.exit(code or EXIT_OK)

    return inner


_LOCAL = (
    click.option("--seed", "o_seed", type=int, default=None, help="Overrides the global --seed."),
    click.option("--budget", "o_budget", type=int, default=None, help="Overrides the global --budget."),
    click.option("--format", "o_fmt", type=click.Choice(["text", "json"]), default=None,
                 help="Overrides the global --format."),
    click.option("--model", "o_model", default=None, help="Overrides the global --model."),
    click.option("--base", "o_base", default=None, help="Overrides the global --base."),
)


def local_options(fn):
    """Accept the global flags after the subcommand too."""

    @functools.wraps(fn)
    def inner(cfg, *args, o_seed=None, o_budget=None, o_fmt=None, o_model=None, o_base=None, **kwargs):
        given = {"seed": o_seed, "budget": o_budget, "fmt": o_fmt, "model_path": o_model, "base_spec": o_base}
        cfg = replace(cfg, **{k: v for k, v in given.items() if v is not None})
        return fn(cfg, *args, **kwargs)

    for opt in reversed(_LOCAL):
        inner = opt(inner)
    return inner


@click.group()
@click.option("--seed", default=0, show_default=True, type=int, help="Seed for every random choice.")
@click.option("--budget", default=None, type=int, help="Enumeration budget (module default if unset).")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
@click.option("--model", "model_path", default=None, help="Model JSON file; the bundled model if unset.")
@click.option("--base", "base_spec", default="6", show_default=True,
              help="Indexed base: 'per', 'omega', k copies of the singleton base, or tags.")
@click.pass_context
def main(ctx, seed, budget, fmt, model_path, base_spec):
    """Finite laboratory for translation-nondisjointness forcing conditions."""
    ctx.obj = RunConfig(seed, budget, fmt, model_path, base_spec)


# validate

@main.command()
@click.argument("path")
@click.option("--max-v", default=forcing.MAX_V, show_default=True, help="Largest catalog v examined.")
@click.pass_obj
@local_options
@guarded
def validate(cfg: RunConfig, path, max_v):
    """Check a condition file against the eleven demands."""
    p = read_condition(path)
    rep = forcing.validate(p, cfg.model(), cfg.ib(), max_v)
    verdicts = rep.verdicts()
    lines = [f"{d:>4} {v}" for d, v in verdicts.items()]
    lines += [f"FAIL {v['demand']}: {v['message']}" for v in rep.violations]
    lines.append("valid" if rep.ok else f"invalid: {', '.join(rep.failed())}")
    emit(cfg, {"ok": rep.ok, "verdicts": verdicts, "violations": rep.violations, "stats": rep.stats}, lines)
    return EXIT_OK if rep.ok else EXIT_FAIL


# construct

@main.command()
@click.argument("kind", type=click.Choice(["genesis", "add", "bump", "twin", "amalgamate"]))
@click.option("--labels", default=None, help="genesis: five comma-separated labels.")
@click.option("--in", "src", default=None, help="Input condition file.")
@click.option("--with", "other", default=None, help="amalgamate: the second twin.")
@click.option("--beta", default=None, type=int, help="add: the new label.")
@click.option("--relabel", default=None, help="twin: moves as 'a:b,c:d'; other labels stay.")
@click.option("--out", default=None, help="Output file (stdout if unset).")
@click.option("--random-tails", is_flag=True, help="Draw seeded random tails instead of basis tails.")
@click.pass_obj
@local_options
@guarded
def construct(cfg: RunConfig, kind, labels, src, other, beta, relabel, out, random_tails):
    """Build a condition: genesis, add, bump, twin or amalgamate."""
    ib = cfg.ib()
    rng = cfg.rng() if random_tails else None

    def need(value, flag):
        if value is None:
            raise InputError(f"construct {kind} needs {flag}")
        return value

    below = []
    if kind == "genesis":
        q = forcing.genesis(parse_ints(need(labels, "--labels"), "--labels"), ib, rng)
    else:
        p = read_condition(need(src, "--in"))
        below.append(p)
        if kind == "add":
            q = forcing.add_ordinal(p, need(beta, "--beta"), ib, rng)
        elif kind == "bump":
            q = forcing.bump_iota(p, ib, rng)
        elif kind == "twin":
            moves = {}
            for item in need(relabel, "--relabel").split(","):
                try:
                    a, b = item.split(":")
                    moves[int(a)] = int(b)
                except ValueError:
                    raise InputError(f"bad relabel item {item!r}") from None
            q = forcing.delta_twin(p, {a: moves.get(a, a) for a in p.w})
            below = []
        else:
            q2 = read_condition(need(other, "--with"))
            below.append(q2)
            q = forcing.amalgamate(p, q2, ib, cfg.model(), rng)
    text = q.dumps()
    ordered = all(forcing.leq(b, q, ib) for b in below)
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text)
        emit(cfg, {"out": out, "n": q.n, "M": q.M, "iota": q.iota, "w": list(q.w), "extends_input": ordered},
             [f"wrote {out}: |w|={len(q.w)} n={q.n} M={q.M} iota={q.iota}"]
             + (["extends its input(s): yes" if ordered else "extends its input(s): NO"] if below else []))
    return EXIT_OK if ordered else EXIT_FAIL


# ranks

@main.group()
def rank():
    """Non-disjointness rank of an M-tuple or splitting rank of a set."""


@rank.command("ndrk")
@click.argument("mtuple")
@click.option("--trees", "trees_path", required=True, help="Condition file or tree file giving the trees.")
@click.option("--chain", is_flag=True, help="Also print the derivative chain sizes.")
@click.option("--max-u", default=mstruct.DEFAULT_MAX_U, show_default=True)
@click.option("--max-g", default=mstruct.DEFAULT_MAX_G, show_default=True)
@click.pass_obj
@local_options
@guarded
def rank_ndrk(cfg: RunConfig, mtuple, trees_path, chain, max_u, max_g):
    m = mstruct.MTuple.from_json(read_json(mtuple))
    cat = mstruct.Catalog(read_trees(trees_path), cfg.ib(), max_u=max_u, max_g=max_g)
    budget = cfg.budget or mstruct.NDRK_BUDGET
    value = mstruct.ndrk(m, cat, budget)
    obj = {"ndrk": value}
    lines = [f"ndrk = {value}"]
    if chain:
        stages = mstruct.derivative_chain(cat, cfg.budget or mstruct.CATALOG_BUDGET)
        obj["chain_sizes"] = [len(s) for s in stages]
        lines.append("derivative chain sizes: " + " ".join(map(str, obj["chain_sizes"])))
    emit(cfg, obj, lines)


@rank.command("split")
@click.option("--set", "members", required=True, help="Comma-separated elements of the model.")
@click.option("--stats", is_flag=True, help="Print memo statistics.")
@click.pass_obj
@local_options
@guarded
def rank_split(cfg: RunConfig, members, stats):
    model = cfg.model()
    w = parse_ints(members, "--set")
    eng = splitrank.RankEngine(model)
    r = eng.rank(w)
    ref = splitrank.reference_rank(w, model)
    obj = {"set": sorted(set(w)), "rank": splitrank.rank_to_json(r), "reference_agrees": r == ref}
    lines = [f"rank = {splitrank.rank_to_json(r)}", f"reference agrees: {'yes' if r == ref else 'NO'}"]
    if r is not splitrank.INF:
        wt = eng.witness(w)
        obj["witness"] = {"zeta": wt.zeta, "k": wt.k}
        lines.append(f"witness: zeta={wt.zeta} k={wt.k}")
    if stats:
        obj["memo"] = {"entries": len(eng._profile), "evaluations": eng.calls}
        lines.append(f"memo entries: {len(eng._profile)}, evaluations: {eng.calls}")
    emit(cfg, obj, lines)
    return EXIT_OK if r == ref else EXIT_FAIL


# catalog

@main.command()
@click.argument("path")
@click.option("--max-v", default=forcing.MAX_V, show_default=True)
@click.option("--explicit", is_flag=True, help="List every triple (subject to --budget).")
@click.pass_obj
@local_options
@guarded
def catalog(cfg: RunConfig, path, max_v, explicit):
    """Catalog families of a condition."""
    p = read_condition(path)
    fams = forcing.catalog_families(p, max_v)
    size = sum(f.count() for f in fams)
    obj = {
        "families": [{"ell": f.ell, "v": list(f.v), "min_sigma": min(len(o) for _, o in f.opts)} for f in fams],
        "triples": size,
    }
    lines = [f"ell={f['ell']} v={f['v']} min_sigma={f['min_sigma']}" for f in obj["families"]]
    lines.append(f"{len(fams)} families, {size} triples")
    if explicit:
        entries = forcing.catalog(p, cfg.budget or forcing.CATALOG_BUDGET, max_v)
        obj["entries"] = [{"ell": e.ell, "v": list(e.v), "m": e.m.to_json()} for e in entries]
        lines += [json.dumps(x, sort_keys=True) for x in obj["entries"]]
    emit(cfg, obj, lines)


# recover

@main.command()
@click.argument("path")
@click.argument("mtuple")
@click.pass_obj
@local_options
@guarded
def recover(cfg: RunConfig, path, mtuple):
    """Find (rho, v) placing a level-n M-tuple in the catalog."""
    p = read_condition(path)
    m = mstruct.MTuple.from_json(read_json(mtuple))
    rho, v = forcing.recover_membership(p, m)
    emit(cfg, {"rho": str(rho), "v": list(v)}, [f"rho = {rho}", f"v = {list(v)}"])


# chain

@main.command()
@click.argument("paths", nargs=-1, required=True)
@click.pass_obj
@local_options
@guarded
def chain(cfg: RunConfig, paths):
    """Union an increasing chain of conditions."""
    conds = [read_condition(x) for x in paths]
    lim = forcing.chain_limit(conds)  # bases read off the g sizes
    obj = {
        "eta": {str(a): str(w) for a, w in sorted(lim.eta.items())},
        "trees": [t.to_json() for t in lim.trees],
        "evidence_failures": [list(x) for x in lim.evidence],
    }
    lines = [f"eta_{a} = {w}" for a, w in sorted(lim.eta.items())]
    lines.append(f"{len(lim.trees)} trees, depths up to {max(t.depth for t in lim.trees)}")
    lines.append("largeness evidence: ok" if not lim.evidence else f"largeness evidence fails at {lim.evidence}")
    emit(cfg, obj, lines)
    return EXIT_OK if not lim.evidence else EXIT_FAIL


# nice-check

@main.command("nice-check")
@click.option("--depth", default=5, show_default=True)
@click.option("--max-size", default=3, show_default=True)
@click.option("--tag", "tags", multiple=True, help="Check only these simple bases (e.g. defect).")
@click.pass_obj
@local_options
@guarded
def nice_check(cfg: RunConfig, depth, max_size, tags):
    """Bounded checks of the base axioms and of niceness."""
    reports = []
    if tags:
        for t in tags:
            reports.append(check_simple_base(t, depth, max_size))
    else:
        ib = cfg.ib()
        for t in sorted(set(ib.tags)):
            reports.append(check_simple_base(t, depth, max_size))
        reports.append(check_nice(ib, depth, max_size))
    ok = all(r.ok for r in reports)
    obj = {"ok": ok, "reports": [{"name": r.name, "violations": r.violations[:20], "count": len(r.violations)}
                                 for r in reports]}
    lines = []
    for r in reports:
        lines.append(f"{r.name}: {'pass' if r.ok else f'{len(r.violations)} violations'}")
        lines += [f"  {v}" for v in r.violations[:5]]
    emit(cfg, obj, lines)
    return EXIT_OK if ok else EXIT_FAIL


# stress

@main.command("stress")
@click.argument("campaign", type=click.Choice(stress.CAMPAIGNS))
@click.option("--trials", default=None, type=int, help="Trial count (campaign default if unset).")
@click.option("--plant-bug", is_flag=True, help="Swap in a broken component; the campaign must fail.")
@click.pass_obj
@local_options
@guarded
def stress_cmd(cfg: RunConfig, campaign, trials, plant_bug):
    """Seeded property campaigns."""
    n = trials if trials is not None else DEFAULT_TRIALS[campaign]
    summary = stress.run(campaign, n, cfg.seed, plant=plant_bug)
    lines = [f"{campaign}: {n} trials, seed {cfg.seed}"]
    lines += [f"  {k}: {v}" for k, v in sorted(summary.counts.items())]
    lines.append(f"{len(summary.violations)} violations")
    lines += [f"  trial {v['trial']} (seed {v['seed']}): {v['message']}" for v in summary.violations[:20]]
    emit(cfg, summary.to_json(), lines)
    return EXIT_OK if summary.ok else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    main()
