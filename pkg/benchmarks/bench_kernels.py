"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py --n 4000 --d 20 --repeat 3
"""

import argparse
import time

import numpy as np

from pcaqs import kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4000)
    ap.add_argument("--d", type=int, default=20)
    ap.add_argument("--pairs", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    X = rng.normal(size=(args.n, args.d))
    lo, hi = X.min(0), X.max(0)
    i = rng.integers(0, args.n, args.pairs)
    j = rng.integers(0, args.n, args.pairs)
    Y = rng.normal(size=(args.n // 2, args.d))
    cases = {
        "euclid_row_sums": lambda impl: impl(X, X),
        "euclid_cross": lambda impl: impl(X, Y),
        "rbf_row_sums": lambda impl: impl(X, X, 1.0),
        "feature_counts": lambda impl: impl(X, lo, hi, 20),
        "pair_distances": lambda impl: impl(X, i, j),
    }
    print(f"n={args.n} d={args.d} pairs={args.pairs} backends={','.join(kernels.backends())}")
    print(f"{'kernel':<18}{'numpy s':>10}{'numba s':>10}{'speedup':>9}{'max rel diff':>14}")
    for label, call in cases.items():
        name = "euclid_row_sums" if label == "euclid_cross" else label
        t_np, ref = best_of(lambda: call(getattr(kernels, name + "_numpy")), args.repeat)
        if not kernels.NUMBA_AVAILABLE:
            print(f"{label:<18}{t_np:>10.4f}{'-':>10}{'-':>9}{'-':>14}")
            continue
        call(getattr(kernels, name + "_numba"))  # compile / load cache
        t_nb, out = best_of(lambda: call(getattr(kernels, name + "_numba")), args.repeat)
        diff = np.max(np.abs(out - ref) / np.maximum(np.abs(ref), 1e-300))
        print(f"{label:<18}{t_np:>10.4f}{t_nb:>10.4f}{t_np / t_nb:>9.2f}{diff:>14.1e}")


if __name__ == "__main__":
    main()
