"""Time the compiled kernels against the pure-Python fallback.

Usage: ``python benchmarks/bench_kernels.py [--n 2000] [--m 200] [--repeat 5]``
"""

import argparse
import timeit

import numpy as np

from adjsurv._backend import backends


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2000, help="subjects")
    ap.add_argument("--m", type=int, default=200, help="evaluation times")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    time = np.sort(rng.exponential(1.0, args.n))
    event = rng.binomial(1, 0.7, args.n).astype(np.int64)
    grid = np.ascontiguousarray(np.quantile(time, np.linspace(0.01, 0.95, args.m)))
    noisy = np.ascontiguousarray(np.linspace(1, 0, 20 * args.n) + rng.normal(0, 0.05, 20 * args.n))
    weights = np.ones_like(noisy)

    impls = backends()
    print(f"n={args.n} m={args.m} backends={sorted(impls)}")
    results = {}
    for name, mod in sorted(impls.items()):
        loo = min(timeit.repeat(lambda: mod.loo_km(time, event, grid), number=1,
                                repeat=args.repeat))
        pava = min(timeit.repeat(lambda: mod.pava_nonincreasing(noisy, weights), number=1,
                                 repeat=args.repeat))
        results[name] = (loo, pava)
        print(f"{name:>7}  loo_km {loo * 1e3:9.2f} ms   pava {pava * 1e3:9.2f} ms")
    if {"cython", "python"} <= set(results):
        c, p = results["cython"], results["python"]
        print(f"speedup  loo_km {p[0] / c[0]:8.1f}x   pava {p[1] / c[1]:8.1f}x")


if __name__ == "__main__":
    main()
