"""Pure-Python/numpy versions of the compiled kernels in ``_ckernels``.

Same signatures and results; used when the extension is not built or when
``MA_PURE_PYTHON=1`` is set.
"""
import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve_triangular


def hessian_stencils(full, dx):
    full = np.asarray(full, dtype=float)
    inv = 1.0 / (dx * dx)
    c = full[1:-1, 1:-1]
    uxx = (full[1:-1, :-2] - 2.0 * c + full[1:-1, 2:]) * inv
    uyy = (full[:-2, 1:-1] - 2.0 * c + full[2:, 1:-1]) * inv
    uxy = (full[:-2, :-2] - full[2:, :-2] - full[:-2, 2:] + full[2:, 2:]) * (0.25 * inv)
    return uxx.ravel(), uyy.ravel(), uxy.ravel()


def ilu0_factor(indptr, indices, data):
    nrow = len(indptr) - 1
    indptr = [int(v) for v in indptr]
    indices = [int(v) for v in indices]
    lu = [float(v) for v in data]
    diag = [-1] * nrow
    for i in range(nrow):
        for p in range(indptr[i], indptr[i + 1]):
            if indices[p] == i:
                diag[i] = p
        if diag[i] < 0:
            raise ZeroDivisionError(f"ILU(0): row {i} has no diagonal entry")

    for i in range(nrow):
        pos = {indices[p]: p for p in range(indptr[i], indptr[i + 1])}
        for p in range(indptr[i], diag[i]):
            k = indices[p]
            lik = lu[p] / lu[diag[k]]
            lu[p] = lik
            for q in range(diag[k] + 1, indptr[k + 1]):
                target = pos.get(indices[q])
                if target is not None:
                    lu[target] -= lik * lu[q]
        if lu[diag[i]] == 0.0:
            raise ZeroDivisionError(f"ILU(0): zero pivot in row {i}")
    return np.array(lu), np.array(diag, dtype=np.intc)


_split_cache = {}


def _split(indptr, indices, lu, diag):
    key = (id(lu), lu.ctypes.data)
    hit = _split_cache.get(key)
    if hit is not None and hit[0] is lu:
        return hit[1], hit[2]
    n = len(indptr) - 1
    m = sp.csr_matrix((lu, indices, indptr), shape=(n, n))
    lower = sp.tril(m, k=-1, format="csr") + sp.identity(n, format="csr")
    upper = sp.triu(m, k=0, format="csr")
    _split_cache.clear()
    _split_cache[key] = (lu, lower, upper)
    return lower, upper


def ilu0_solve(indptr, indices, lu, diag, b):
    lower, upper = _split(indptr, indices, lu, diag)
    y = spsolve_triangular(lower, b, lower=True, unit_diagonal=True)
    return spsolve_triangular(upper, y, lower=False)
