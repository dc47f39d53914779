"""Time the numba and numpy batch kernels on the same random stacks.

    python benchmarks/bench_kernels.py --trials 20000 --dims 2,3,4

The first numba call compiles (or loads the on-disk cache) and is excluded.
"""

import argparse
import time

import numpy as np

from deftrace import _kernels
from deftrace.matrix import random_contraction_stack, random_pd_stack, random_signed_stack


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=20000)
    ap.add_argument("--dims", default="2,3,4")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        print("numba is not installed; only the numpy path is available")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':8} {'n':>2} {'trials':>7} {'numpy s':>9} {'numba s':>9} {'speedup':>8} {'max rel diff':>12}")
    for n in (int(d) for d in args.dims.split(",")):
        A = random_pd_stack(args.trials, n, rng)
        H = random_contraction_stack(args.trials, n, rng)
        L = random_signed_stack(args.trials, n, 1, rng)
        cases = {
            "phi": (_kernels.phi_values_numpy, getattr(_kernels, "phi_values_numba", None), 1.7, 0.6),
            "upsilon": (_kernels.upsilon_values_numpy, getattr(_kernels, "upsilon_values_numba", None), 0.5, 1.5),
        }
        for name, (np_fn, nb_fn, a, b) in cases.items():
            t_np, v_np = _best(lambda: np_fn(A, H, L, a, b), args.repeat)
            if nb_fn is None:
                print(f"{name:8} {n:>2} {args.trials:>7} {t_np:>9.4f} {'-':>9} {'-':>8} {'-':>12}")
                continue
            nb_fn(A[:2], H[:2], L[:2], a, b)
            t_nb, v_nb = _best(lambda: nb_fn(A, H, L, a, b), args.repeat)
            diff = np.nanmax(np.abs(v_nb - v_np) / np.abs(v_np))
            print(f"{name:8} {n:>2} {args.trials:>7} {t_np:>9.4f} {t_nb:>9.4f} {t_np / t_nb:>8.2f} {diff:>12.2e}")


if __name__ == "__main__":
    main()
