"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends get identical inputs; results are compared before timing.
"""

import argparse
import random
import timeit

from forcelab import _pykernels

try:
    from forcelab import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    narrow = [[rng.getrandbits(48) for _ in range(40)] for _ in range(200)]
    wide = [[rng.getrandbits(300) for _ in range(120)] for _ in range(40)]
    ell = 12
    scan = []
    for _ in range(30):
        b = set(rng.sample(range(1 << ell), 1 << (ell - 2)))
        x = rng.getrandbits(ell)
        a = [w ^ x for w in rng.sample(sorted(b), 5)]
        scan.append((a, sorted(b), ell))
    levels = [(h, frozenset(rng.sample(range(1 << 10), 300))) for h in range(6)]
    pairs = [(rng.getrandbits(10), rng.getrandbits(10) | 1, levels) for _ in range(40)]
    return {
        "rank_rows narrow": ("rank_rows", [(r,) for r in narrow]),
        "rank_rows wide": ("rank_rows", [(r,) for r in wide]),
        "translate_scan": ("translate_scan", scan),
        "pair_options": ("pair_options", pairs),
    }


def run_all(mod, name, args):
    fn = getattr(mod, name)
    return [fn(*a) for a in args]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    opts = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels unavailable; only the fallback would run")
        return
    print(f"{'kernel':<18} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for label, (name, args) in cases(random.Random(opts.seed)).items():
        assert run_all(_pykernels, name, args) == run_all(_ckernels, name, args), label
        times = []
        for mod in (_pykernels, _ckernels):
            t = min(timeit.repeat(lambda: run_all(mod, name, args), number=1, repeat=opts.repeat))
            times.append(t * 1e3)
        print(f"{label:<18} {times[0]:>10.2f} {times[1]:>10.2f} {times[0] / times[1]:>7.1f}x")


if __name__ == "__main__":
    main()
