"""Time the numba and numpy kernel paths side by side.

    python benchmarks/bench_kernels.py [--repeat 5]

Both paths are imported from the same module; the env flag only changes
which one the public dispatchers call, so here they are timed directly.
"""
import argparse
import timeit

import numpy as np

from taguchi import kernels
from taguchi._accel import HAVE_NUMBA
from taguchi.orthogonal_array import rao_hamming


def cases():
    rng = np.random.default_rng(0)
    big = rao_hamming(3, 5).matrix - 1  # 243 x 121
    values = rng.normal(size=big.shape[0])
    shape = np.array([4, 4, 4, 4, 4, 4, 4, 4], dtype=np.int64)  # 65536 points
    tables = rng.normal(size=(8, 4))
    return [
        ("pair_counts   OA(243,121,3)", kernels.pair_counts_nb, kernels.pair_counts_np, (big, 3)),
        ("column_counts OA(243,121,3)", kernels.column_counts_nb, kernels.column_counts_np, (big, 3)),
        ("group_means   OA(243,121,3)", kernels.group_means_nb, kernels.group_means_np, (big, values, 3)),
        ("grid_indices  4^8", kernels.grid_indices_nb, kernels.grid_indices_np, (shape,)),
        ("additive_grid 4^8", kernels.additive_grid_nb, kernels.additive_grid_np, (tables, shape)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba not importable; numba column falls back to plain python")
    print(f"{'kernel':30s} {'numba ms':>10s} {'numpy ms':>10s} {'ratio':>7s}")
    for name, nb, np_, a in cases():
        nb(*a)  # compile outside the timed region
        assert np.allclose(nb(*a), np_(*a), equal_nan=True)
        t_nb = min(timeit.repeat(lambda: nb(*a), number=3, repeat=args.repeat)) / 3 * 1e3
        t_np = min(timeit.repeat(lambda: np_(*a), number=3, repeat=args.repeat)) / 3 * 1e3
        print(f"{name:30s} {t_nb:10.3f} {t_np:10.3f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
