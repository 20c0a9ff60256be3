"""Timing comparison of the numba and numpy kernel backends.

Correctness comes first: for every workload the two backends' outputs are
asserted bit-identical before any timing is reported, so a speedup can
never hide a numerical drift.

Run:  python3 benchmarks/bench_backends.py
"""

import time

import numpy as np

from fusekit._backend import HAS_NUMBA
from fusekit._kernels import fuse_rows, synth_rows

REPEATS = 5

DIST3 = np.full(3, 1.0 / 3.0)


def fuse_workload(n_images):
    rng = np.random.default_rng(7)
    raw = rng.random((4, n_images, 3))
    probs = raw / raw.sum(axis=2, keepdims=True)
    weights = np.array([0.895, 0.851, 0.846, 0.862])
    return lambda backend: fuse_rows(probs, weights, backend=backend)


def synth_workload(n_images):
    acc = np.array([0.9, 0.8, 0.7, 0.6])
    return lambda backend: synth_rows(42, acc, n_images, 0.3, 8.0, DIST3,
                                      backend=backend)


def assert_identical(a, b, name):
    for ix, (x, y) in enumerate(zip(a, b)):
        if not np.array_equal(x, y):
            raise AssertionError(f"{name}: output {ix} differs between backends")


def best_time(fn, backend):
    best = float("inf")
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        fn(backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    if not HAS_NUMBA:
        print("numba not importable; nothing to compare")
        return
    cases = [
        ("fuse_rows  4x200k", fuse_workload(200_000)),
        ("fuse_rows  4x1M", fuse_workload(1_000_000)),
        ("synth_rows 4x100k", synth_workload(100_000)),
        ("synth_rows 4x500k", synth_workload(500_000)),
    ]
    print(f"{'workload':<20} {'numpy':>10} {'numba':>10} {'speedup':>9}")
    for name, fn in cases:
        fn("numba")  # JIT warmup
        assert_identical(fn("numpy"), fn("numba"), name)
        t_np = best_time(fn, "numpy")
        t_nb = best_time(fn, "numba")
        print(f"{name:<20} {t_np * 1e3:>8.1f}ms {t_nb * 1e3:>8.1f}ms "
              f"{t_np / t_nb:>8.1f}x")
    print("all outputs bit-identical across backends")


if __name__ == "__main__":
    main()
