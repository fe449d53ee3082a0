"""Compare the compiled and pure-Python kernels.

Usage::

    python3 benchmarks/bench_core.py [--sizes 500 2000 8000] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from bubbletower import _core_py

try:
    from bubbletower import _core
except ImportError:  # extension not built
    _core = None


def make_system(n, seed=0):
    rng = np.random.default_rng(seed)
    lower = rng.normal(size=(n, 2, 2))
    upper = rng.normal(size=(n, 2, 2))
    diag = rng.normal(size=(n, 2, 2)) + 6 * np.eye(2)
    rhs = rng.normal(size=(n, 2))
    return lower, diag, upper, rhs


def make_projection(n, seed=0):
    rng = np.random.default_rng(seed)
    s = np.linspace(-80.0, 0.0, n)
    betas = np.array([2.0, 6.0, 4.0, 2.0])
    log_deltas = np.sort(rng.uniform(-60.0, -1.0, 4))
    coef = np.array([1.0, -0.5, 1.0, -1.0])
    return s, betas, log_deltas, coef


def best_of(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[500, 2000, 8000])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    if _core is None:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'kernel':<22}{'n':>8}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}")
    for kernel, make in (("block_tridiag_solve", make_system), ("projection_sum", make_projection)):
        for n in args.sizes:
            data = make(n)
            t_py = best_of(getattr(_core_py, kernel), data, args.repeat)
            if _core is None:
                print(f"{kernel:<22}{n:>8}{1e3 * t_py:>14.3f}{'-':>14}{'-':>10}")
                continue
            t_cy = best_of(getattr(_core, kernel), data, args.repeat)
            print(f"{kernel:<22}{n:>8}{1e3 * t_py:>14.3f}{1e3 * t_cy:>14.3f}{t_py / t_cy:>10.1f}")


if __name__ == "__main__":
    main()
