"""Compare the numba kernels with their pure-numpy fallbacks.

Usage: ``python3 benchmarks/bench_kernels.py [--repeat 5]``

Each kernel is run once per backend before timing so that numba's
compilation (or cache load) is not counted. Reported times are the best
of ``--repeat`` runs.
"""

import argparse
import timeit

import numpy as np

from sparsehm import kernels
from sparsehm.iforest import c_table


def cases(rng):
    lx = np.log(np.exp(rng.uniform(-7, 7, (2000, 1024))))
    ks = rng.standard_normal((2000, 300))
    pts = rng.standard_normal((512, 3))
    m = kernels.heap_size(9)
    grow = (pts, np.arange(3), rng.random(m), 1 - rng.random(m), 9)
    tree = kernels.get_kernel("grow_tree", "numpy")(*grow)
    query = rng.standard_normal((20_000, 3))
    return {
        "log_power_ratio_rows (2000 x 1024)": ("log_power_ratio_rows", (lx, -2.0)),
        "ks_normal_rows (2000 x 300)": ("ks_normal_rows", (ks,)),
        "grow_tree (512 points, height 9)": ("grow_tree", grow),
        "tree_path_lengths (20000 queries)": ("tree_path_lengths", (query, *tree, c_table(512))),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s} {'numpy ms':>10s} {'numba ms':>10s} {'speed-up':>9s}")
    for label, (name, call_args) in cases(rng).items():
        times = {}
        for backend in ("numpy", "numba"):
            fn = kernels.get_kernel(name, backend)
            fn(*call_args)
            times[backend] = min(timeit.repeat(lambda: fn(*call_args), number=1, repeat=args.repeat)) * 1e3
        print(f"{label:40s} {times['numpy']:10.2f} {times['numba']:10.2f} {times['numpy'] / times['numba']:8.1f}x")


if __name__ == "__main__":
    main()
