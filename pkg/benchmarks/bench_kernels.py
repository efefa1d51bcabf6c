"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from shadowqpt import _purepy

try:
    from shadowqpt import _kernels
except ImportError:  # extension not built
    _kernels = None


def symplectic_inputs(k: int, size: int, rng: np.random.Generator):
    cols = []
    for m in range(1, k + 1):
        a = rng.integers(1, 4**m, size=size)
        c = rng.integers(0, 2 ** (2 * m - 1), size=size)
        cols.append(np.stack([a, c], axis=1))
    return np.stack(cols, axis=1), k


def born_inputs(rng: np.random.Generator):
    p = rng.random((1024, 64))
    cum = np.cumsum(p / p.sum(axis=1, keepdims=True), axis=1)
    return cum, rng.random((1024, 50))


def product_inputs(rng: np.random.Generator):
    return rng.integers(0, 6, size=(200000, 10)), rng.normal(size=(10, 6))


def cases(rng: np.random.Generator):
    return [
        ("symplectic_batch k=2 x4096", "symplectic_batch", symplectic_inputs(2, 4096, rng)),
        ("symplectic_batch k=6 x512", "symplectic_batch", symplectic_inputs(6, 512, rng)),
        ("born_sample_batch 1024x64, 50 reps", "born_sample_batch", born_inputs(rng)),
        ("product_table_values 2e5x10", "product_table_values", product_inputs(rng)),
    ]


def best_time(fn, args, repeat: int) -> float:
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':40s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for label, name, inputs in cases(rng):
        t_py = best_time(getattr(_purepy, name), inputs, args.repeat)
        if _kernels is None:
            print(f"{label:40s} {1e3 * t_py:12.2f} {'n/a':>12s} {'n/a':>8s}")
            continue
        t_cy = best_time(getattr(_kernels, name), inputs, args.repeat)
        print(f"{label:40s} {1e3 * t_py:12.2f} {1e3 * t_cy:12.2f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
