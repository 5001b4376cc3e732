import random

from forcelab import stress
from forcelab.splitrank import block_of, default_blocks


def test_campaigns_pass_small():
    for name, n in [("litlem", 40), ("ranks", 40), ("forcing", 3), ("amalg", 3), ("recover", 4)]:
        s = stress.run(name, n, 11)
        assert s.ok, (name, s.violations[:3])
        assert s.counts


def test_planted_bugs_are_noticed():
    for name, n in [("litlem", 40), ("ranks", 20), ("forcing", 2), ("amalg", 2), ("recover", 2)]:
        assert not stress.run(name, n, 11, plant=True).ok, name


def test_summaries_are_reproducible():
    a = stress.run("litlem", 25, 3).to_json()
    b = stress.run("litlem", 25, 3).to_json()
    assert a == b


def test_failures_carry_replay_seeds():
    s = stress.run("litlem", 30, 2, plant=True)
    v = s.violations[0]
    assert v["seed"] == stress.trial_seed(2, v["trial"])


def test_litlem_instances_mix_cases():
    rng = random.Random(0)
    sizes = {len(stress.litlem_instance(rng, 6)[0]) for _ in range(200)}
    assert 4 in sizes and max(sizes) >= 5


def test_twins_move_within_blocks():
    blk = block_of(default_blocks())
    rng = random.Random(1)
    for k in stress.KERNEL_SIZES:
        p, q, kernel = stress.twin_pair(rng, k, __import__("forcelab").bases.IndexedBase.copies(6))
        assert sorted(set(p.w) & set(q.w)) == kernel
        assert sorted(blk[a] for a in p.w) == sorted(blk[a] for a in q.w)
