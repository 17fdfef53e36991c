"""Time the numba and numpy simplex kernels on the best gain-loss LPs of random trees.

    python3 benchmarks/bench_simplex.py [--trees 200] [--stages 3] [--branches 4]

Both kernels solve the same problems in one process; outcomes are compared
for equality before timings are reported.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from glr import _simplex_kernels as kern
from glr import lp_core
from glr.gainloss import _primal_lp
from glr.kernels import _kernel_lp
from glr.random_trees import TreeShape, random_tree


def problems(count: int, shape: TreeShape, seed: int) -> list[lp_core.LpProblem]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        tree = random_tree(rng, shape)
        out.append(_primal_lp(tree, None)[0])
        out.append(_kernel_lp(tree, None, False))
    return out


def run(kernel, lps: list[lp_core.LpProblem]) -> tuple[float, list]:
    lp_core.kern.iterate = kernel
    t0 = time.perf_counter()
    results = [lp_core.solve_lp(p) for p in lps]
    return time.perf_counter() - t0, results


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trees", type=int, default=200)
    ap.add_argument("--stages", type=int, default=3)
    ap.add_argument("--branches", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    shape = TreeShape(stages=(args.stages, args.stages), branches=(args.branches, args.branches))
    lps = problems(args.trees, shape, args.seed)
    m, n = lps[0].shape
    print(f"{len(lps)} LPs, first is {m} x {n}")
    if not kern.HAVE_NUMBA:
        print("numba unavailable; numpy kernel only")
    else:
        run(kern.iterate_numba, lps[:2])  # compile outside the timing
    t_np, r_np = run(kern.iterate_numpy, lps)
    print(f"numpy  {t_np:8.3f} s")
    if kern.HAVE_NUMBA:
        t_nb, r_nb = run(kern.iterate_numba, lps)
        same = all(a.status == b.status and (a.value == b.value or abs(a.value - b.value) <= 1e-9 * max(1.0, abs(a.value)))
                   for a, b in zip(r_np, r_nb))
        print(f"numba  {t_nb:8.3f} s   speedup {t_np / t_nb:5.2f}x   outcomes agree: {same}")


if __name__ == "__main__":
    main()
