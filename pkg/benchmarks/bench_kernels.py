"""Time the compiled kernels against the pure-Python reference on drone cores.

Usage: python3 benchmarks/bench_kernels.py [--k 4] [--horizons 4 6 8] [--repeat 5]
"""
import argparse
import math
import time

import numpy as np

from erci import kernels
from erci.drone import BenchmarkSpec, gen_drone_benchmark
from erci.evaluate import uniform_policy
from erci.preprocess import to_core


def best_of(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--horizons", type=int, nargs="+", default=[4, 6, 8])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.compiled is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation` first")

    print(f"{'horizon':>7} {'nodes':>7} {'kernel':<18} {'python s':>10} {'compiled s':>11} {'speedup':>8}")
    for hz in args.horizons:
        b = gen_drone_benchmark(BenchmarkSpec(args.k, hz))
        core = to_core(b.game, b.soft, b.hard, hz)
        arrs = core.arrays()
        pol = uniform_policy(core).probs
        calls = {
            "evaluate": lambda k: k.evaluate(*arrs, pol, core.top),
            "soft_backward": lambda k: k.soft_backward(*arrs, pol, core.top, 3.0),
            "lex_backward": lambda k: k.lex_backward(*arrs, pol, core.top, 1e-9),
            "min_pass": lambda k: k.min_pass(*arrs, pol, core.top, 1),
            "min_entropy_pass": lambda k: k.min_entropy_pass(*arrs, core.top, 3.0, 1e-12),
        }
        for name, call in calls.items():
            ref, fast = call(kernels.python), call(kernels.compiled)
            for x, y in zip(ref, fast):
                np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12)
            tp = best_of(lambda: call(kernels.python), args.repeat)
            tc = best_of(lambda: call(kernels.compiled), args.repeat)
            print(f"{hz:>7} {core.n_nodes:>7} {name:<18} {tp:>10.4f} {tc:>11.5f} {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
