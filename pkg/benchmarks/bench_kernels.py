"""Time the compiled kernels against the pure-Python fallbacks.

    python benchmarks/bench_kernels.py [--n 50 100] [--reps 5]
"""
import argparse
import statistics
import time

import numpy as np
import scipy.sparse as sp

from monge_ampere import _pykernels
from monge_ampere.fdops import assemble_laplacian
from monge_ampere.grid import make_grid

try:
    from monge_ampere import _ckernels
except ImportError:
    _ckernels = None


def _time(fn, reps):
    out = []
    for _ in range(reps):
        t = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t)
    return statistics.median(out) * 1e3


def bench(n, reps):
    g = make_grid(n)
    A = sp.csr_matrix(assemble_laplacian(g).matrix)
    A.sort_indices()
    ip, ix = A.indptr.astype(np.intc), A.indices.astype(np.intc)
    data = A.data.astype(float)
    full = np.random.default_rng(0).standard_normal((n + 2, n + 2))
    b = np.random.default_rng(1).standard_normal(g.size)
    rows = []
    for name, k in (("cython", _ckernels), ("python", _pykernels)):
        if k is None:
            continue
        lu, d = k.ilu0_factor(ip, ix, data)
        rows.append((name,
                     _time(lambda: k.hessian_stencils(full, g.dx), reps),
                     _time(lambda: k.ilu0_factor(ip, ix, data), reps),
                     _time(lambda: k.ilu0_solve(ip, ix, lu, d, b), reps)))
    return rows


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, nargs="+", default=[50, 100])
    p.add_argument("--reps", type=int, default=5)
    args = p.parse_args()
    if _ckernels is None:
        print("compiled kernels unavailable; timing the fallback only")
    print(f"{'n':>5} {'backend':>8} {'hessian ms':>11} {'ilu0 factor ms':>15} {'ilu0 solve ms':>14}")
    for n in args.n:
        rows = bench(n, args.reps)
        for name, h, f, s in rows:
            print(f"{n:>5} {name:>8} {h:>11.3f} {f:>15.3f} {s:>14.3f}")
        if len(rows) == 2:
            c, py = rows
            print(f"{n:>5} {'speedup':>8} {py[1] / c[1]:>10.1f}x {py[2] / c[2]:>14.1f}x {py[3] / c[3]:>13.1f}x")


if __name__ == "__main__":
    main()
