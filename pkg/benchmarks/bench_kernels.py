"""Compiled against numpy Hessian assembly, alone and inside full solves.

    python3 benchmarks/bench_kernels.py --sizes 8 16 32 --constraints 3 --repeat 3
"""
import argparse
import csv
import sys
import time

import numpy as np

from symdisc import kernels
from symdisc.ensemble import random_ensemble
from symdisc.sdp import BlockSpec, hermitian_basis, solve_dp1


def _inverses(rng, n, k):
    out = []
    for _ in range(k):
        G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        out.append(np.linalg.inv(G @ G.conj().T + np.eye(n)))
    return out


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32])
    ap.add_argument("--constraints", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--solve-max", type=int, default=16, help="largest N for full DP1 solves")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = ["numpy"] + (["cython"] if kernels.hessian_compiled is not None else [])
    if len(backends) == 1:
        print("compiled kernel not available; timing numpy only", file=sys.stderr)
    rng = np.random.default_rng(args.seed)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["task", "N", "d", "backend", "seconds", "speedup", "max_abs_diff"])
    for n in args.sizes:
        b = hermitian_basis(BlockSpec((n,)))
        Ws = _inverses(rng, n, args.constraints)
        times, outs = {}, {}
        for be in backends:
            times[be], outs[be] = best_of(
                lambda: kernels.hessian(Ws, b.coef, b.rows, b.cols, backend=be), args.repeat)
        for be in backends:
            diff = float(np.abs(outs[be] - outs["numpy"]).max())
            w.writerow(["hessian", n, b.size, be, f"{times[be]:.4g}",
                        f"{times['numpy'] / times[be]:.2f}", f"{diff:.1e}"])
        if n > args.solve_max:
            continue
        e = random_ensemble(n, args.constraints, args.seed)
        vals = {}
        for be in backends:
            times[be], (_, rep) = best_of(
                lambda: solve_dp1(e.states, e.priors, backend=be), 1)
            vals[be] = rep.optimal_value
        for be in backends:
            w.writerow(["solve_dp1", n, n * n, be, f"{times[be]:.4g}",
                        f"{times['numpy'] / times[be]:.2f}", f"{abs(vals[be] - vals['numpy']):.1e}"])
        sys.stdout.flush()


if __name__ == "__main__":
    main()
