import hashlib
import json

import pytest
from click.testing import CliRunner

from forcelab import forcing
from forcelab.cli import main


@pytest.fixture
def run(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    runner = CliRunner()

    def go(*args):
        return runner.invoke(main, list(args), catch_exceptions=False)

    return go


@pytest.fixture
def genesis_file(run):
    res = run("construct", "genesis", "--labels", "0,1,2,3,4", "--base", "per", "--out", "g.json")
    assert res.exit_code == 0, res.output
    return "g.json"


def digest(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


def test_validate_genesis(run, genesis_file):
    res = run("--base", "per", "validate", genesis_file)
    assert res.exit_code == 0
    assert res.output.strip().endswith("valid")


def test_validate_tampered(run, genesis_file):
    obj = json.load(open(genesis_file))
    obj["r"][0] = 0
    json.dump(obj, open("t.json", "w"))
    res = run("--base", "per", "validate", "t.json")
    assert res.exit_code == 1
    assert "*4" in res.output


def test_validate_malformed_digits(run, genesis_file):
    obj = json.load(open(genesis_file))
    key = sorted(obj["eta"])[0]
    obj["eta"][key] = "2" + obj["eta"][key][1:]
    json.dump(obj, open("m.json", "w"))
    res = run("--base", "per", "validate", "m.json")
    assert res.exit_code == 2
    assert "eta" in res.output


def test_validate_missing_file(run):
    assert run("validate", "nope.json").exit_code == 2


def test_construct_is_deterministic(run):
    hashes = set()
    for _ in range(3):
        run("--seed", "5", "construct", "genesis", "--labels", "0,2,5,7,10", "--random-tails", "--out", "x.json")
        hashes.add(digest("x.json"))
    assert len(hashes) == 1


def test_construct_add_and_bump(run, genesis_file):
    res = run("construct", "add", "--in", genesis_file, "--beta", "9", "--base", "per", "--out", "a.json")
    assert res.exit_code == 0 and "extends its input(s): yes" in res.output
    p = forcing.Condition.loads(open(genesis_file).read())
    q = forcing.Condition.loads(open("a.json").read())
    assert forcing.leq(p, q)
    res = run("construct", "bump", "--in", genesis_file, "--base", "per")
    assert res.exit_code == 2 and "inapplicable" in res.output


def test_construct_stdout(run):
    res = run("construct", "genesis", "--labels", "0,2,5,7,10")
    assert res.exit_code == 0
    assert forcing.Condition.loads(res.output).M == 60


def test_twin_and_amalgamate(run):
    run("construct", "genesis", "--labels", "0,2,5,7,10", "--out", "p.json")
    assert run("construct", "twin", "--in", "p.json", "--relabel", "5:6,7:8,10:11", "--out", "q.json").exit_code == 0
    res = run("construct", "amalgamate", "--in", "p.json", "--with", "q.json", "--out", "r.json")
    assert res.exit_code == 0 and "M=69" in res.output
    assert run("validate", "r.json").exit_code == 0


def test_rank_split(run):
    res = run("--format", "json", "rank", "split", "--set", "0,1", "--stats")
    obj = json.loads(res.output)
    assert res.exit_code == 0 and obj["reference_agrees"] and "memo" in obj


def test_rank_ndrk_top_level(run, genesis_file):
    p = forcing.Condition.loads(open(genesis_file).read())
    # a two-node tuple at the trees' depth has nowhere to grow
    m = next(iter(forcing.harvest(p, __import__("random").Random(0), 1)))
    from forcelab.mstruct import restrict_m

    small = restrict_m(m, sorted(m.u)[:2])
    json.dump(small.to_json(), open("m.json", "w"))
    res = run("--base", "6", "rank", "ndrk", "m.json", "--trees", genesis_file)
    assert res.exit_code == 0, res.output
    assert res.output.strip() == "ndrk = 0"


def test_catalog_budget_exit(run, genesis_file):
    assert run("--budget", "10", "catalog", genesis_file, "--explicit").exit_code == 3
    res = run("catalog", genesis_file)
    assert res.exit_code == 0 and "families" in res.output


def test_recover_cli(run, genesis_file):
    import random

    p = forcing.Condition.loads(open(genesis_file).read())
    m = forcing.harvest(p, random.Random(3), 1)[0]
    json.dump(m.to_json(), open("m.json", "w"))
    res = run("--format", "json", "recover", genesis_file, "m.json")
    assert res.exit_code == 0
    assert len(json.loads(res.output)["v"]) == len(m.u)


def test_chain_cli(run, genesis_file):
    run("construct", "add", "--in", genesis_file, "--beta", "9", "--base", "per", "--out", "a.json")
    assert run("chain", genesis_file, "a.json").exit_code == 0
    assert run("chain", "a.json", genesis_file).exit_code == 2


def test_nice_check(run):
    assert run("nice-check", "--depth", "3").exit_code == 0
    assert run("nice-check", "--depth", "3", "--tag", "defect").exit_code == 1


def test_stress_and_planted_bug(run):
    assert run("stress", "litlem", "--trials", "30", "--seed", "7").exit_code == 0
    assert run("stress", "litlem", "--trials", "30", "--plant-bug").exit_code == 1
    assert run("stress", "ranks", "--trials", "20", "--plant-bug").exit_code == 1


def test_bad_base_spec(run, genesis_file):
    assert run("--base", "nonsense", "validate", genesis_file).exit_code == 2
