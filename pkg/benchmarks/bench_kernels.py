"""Compare the compiled pixel kernels against the pure-numpy fallback.

Run:  python3 benchmarks/bench_kernels.py [--size 1024] [--repeat 5]

The two implementations are imported side by side (the fallback directly,
the package's selected backend via forestdiff.kernels), timed on identical
inputs, and checked for agreement while we are at it.
"""

import argparse
import time

import numpy as np

from forestdiff import kernels
from forestdiff.kernels import _fallback


def _time(fn, *args, repeat=5):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(size, repeat, density=0.35, seed=0):
    rng = np.random.default_rng(seed)
    mask = (rng.random((size, size)) < density).astype(np.uint8)
    other = (rng.random((size, size)) < density).astype(np.uint8)
    offsets = kernels.disk_offsets(2)

    rows = []

    def add(name, fast_fn, slow_fn, args, same):
        t_fast, out_fast = _time(fast_fn, *args, repeat=repeat)
        t_slow, out_slow = _time(slow_fn, *args, repeat=repeat)
        assert same(out_fast, out_slow), "backend disagreement in %s" % name
        rows.append((name, t_fast, t_slow))

    add("label_components",
        kernels.label_components, _fallback.label_components, (mask, 8),
        lambda a, b: np.array_equal(a[0], b[0]) and a[1] == b[1])
    labels, n = kernels.label_components(mask, 8)
    add("region_stats",
        kernels.region_stats, _fallback.region_stats, (labels, n),
        lambda a, b: all(np.array_equal(x, y) for x, y in zip(a, b)))
    add("confusion_counts",
        kernels.confusion_counts, _fallback.confusion_counts, (mask, other),
        lambda a, b: tuple(a) == tuple(b))
    add("binary_dilate",
        kernels.binary_dilate, _fallback.binary_dilate, (mask, offsets),
        np.array_equal)
    add("binary_erode",
        kernels.binary_erode, _fallback.binary_erode, (mask, offsets),
        np.array_equal)

    print("backend under test: %s" % kernels.BACKEND)
    print("mask: %dx%d, density %.2f, best of %d\n" % (size, size, density,
                                                       repeat))
    print("%-18s %12s %12s %9s" % ("kernel", "selected", "fallback",
                                   "speedup"))
    for name, t_fast, t_slow in rows:
        print("%-18s %10.2f ms %10.2f ms %8.1fx"
              % (name, 1e3 * t_fast, 1e3 * t_slow, t_slow / t_fast))


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=1024)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    bench(args.size, args.repeat)
