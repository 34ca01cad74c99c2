"""Inner linear solvers: sparse LU, (preconditioned) conjugate gradients,
ILU(0) and a geometric multigrid V-cycle preconditioner.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _backend
from .fdops import SparseOperator, assemble_laplacian
from .grid import Grid

DEFAULT_CG_TOL = 1e-10
DIRECT_RESIDUAL_TOL = 1e-10


class SingularMatrixError(ArithmeticError):
    pass


class NotSPDError(ArithmeticError):
    """CG met a search direction with non-positive curvature."""


def _csr(A) -> sp.csr_matrix:
    m = A.matrix if isinstance(A, SparseOperator) else A
    return sp.csr_matrix(m)


@dataclass
class LinSolveStats:
    iterations: int
    residual: float
    converged: bool
    history: list = field(default_factory=list, repr=False)


# -- preconditioners -----------------------------------------------------------

class Preconditioner:
    kind = "abstract"

    def apply(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, r):
        return self.apply(r)


class IdentityPreconditioner(Preconditioner):
    kind = "identity"

    def apply(self, r):
        return np.array(r, dtype=float, copy=True)


class ILU0Preconditioner(Preconditioner):
    """Incomplete LU with no fill: ``L`` and ``U`` live on the pattern of ``A``."""

    kind = "ilu0"

    def __init__(self, A):
        m = _csr(A)
        m = sp.csr_matrix((m.data.astype(float), m.indices.astype(np.intc), m.indptr.astype(np.intc)),
                          shape=m.shape)
        m.sort_indices()
        self.indptr = np.ascontiguousarray(m.indptr, dtype=np.intc)
        self.indices = np.ascontiguousarray(m.indices, dtype=np.intc)
        self.lu, self.diag = _backend.ilu0_factor(self.indptr, self.indices,
                                                  np.ascontiguousarray(m.data, dtype=float))
        self.shape = m.shape

    def factors(self) -> tuple[sp.csr_matrix, sp.csr_matrix]:
        n = self.shape[0]
        m = sp.csr_matrix((self.lu, self.indices, self.indptr), shape=self.shape)
        return (sp.tril(m, k=-1, format="csr") + sp.identity(n, format="csr"),
                sp.triu(m, k=0, format="csr"))

    def apply(self, r):
        return _backend.ilu0_solve(self.indptr, self.indices, self.lu, self.diag,
                                   np.ascontiguousarray(r, dtype=float))


def ilu0(A) -> ILU0Preconditioner:
    return ILU0Preconditioner(A)


def _prolongation_1d(n: int) -> sp.csr_matrix:
    """Linear interpolation from ``n // 2`` coarse nodes (fine nodes 2, 4, ...)."""
    nc = n // 2
    rows, cols, vals = [], [], []
    for i in range(nc):
        f = 2 * i + 1
        for r, w in ((f - 1, 0.5), (f, 1.0), (f + 1, 0.5)):
            if 0 <= r < n:
                rows.append(r)
                cols.append(i)
                vals.append(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, nc))


class _Level:
    __slots__ = ("A", "inv_diag", "P", "R", "n")

    def __init__(self, A, n):
        self.A = A
        self.n = n
        self.inv_diag = 1.0 / A.diagonal()
        self.P = self.R = None


class MultigridPreconditioner(Preconditioner):
    """One V(1,1)-cycle of geometric multigrid for the 5-point Laplacian.

    Coarse grids keep every other line until ``n <= 3``; transfer is
    bilinear prolongation with full-weighting restriction ``P.T / 4``,
    coarse operators are Galerkin products ``R A P``, smoothing is damped
    Jacobi (omega = 0.8) and the coarsest level is solved exactly.  Every
    application starts from zero, so the preconditioner is a fixed
    symmetric linear operator.
    """

    kind = "multigrid"

    def __init__(self, grid: Grid, A=None, omega: float = 0.8, coarsest: int = 3):
        A = _csr(assemble_laplacian(grid) if A is None else A)
        self.omega = omega
        self.levels: list[_Level] = []
        n = grid.n
        level = _Level(A, n)
        self.levels.append(level)
        while n > coarsest:
            P1 = _prolongation_1d(n)
            P = sp.kron(P1, P1, format="csr")
            R = (0.25 * P.T).tocsr()
            Ac = (R @ level.A @ P).tocsr()
            Ac = ((Ac + Ac.T) * 0.5).tocsr()
            level.P, level.R = P, R
            n = n // 2
            level = _Level(Ac, n)
            self.levels.append(level)
        dense = level.A.toarray()
        inv = np.linalg.inv(dense)
        self.coarse_inverse = 0.5 * (inv + inv.T)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def _cycle(self, i: int, b: np.ndarray) -> np.ndarray:
        lev = self.levels[i]
        if i == len(self.levels) - 1:
            return self.coarse_inverse @ b
        w = self.omega
        x = w * lev.inv_diag * b
        r = b - lev.A @ x
        x += lev.P @ self._cycle(i + 1, lev.R @ r)
        x += w * lev.inv_diag * (b - lev.A @ x)
        return x

    def apply(self, r):
        return self._cycle(0, np.asarray(r, dtype=float))


def multigrid_preconditioner(grid: Grid, A=None) -> MultigridPreconditioner:
    return MultigridPreconditioner(grid, A)


# -- solvers -----------------------------------------------------------------

def cg(A, b, tol: float = DEFAULT_CG_TOL, max_iters: int | None = None,
       P: Preconditioner | None = None, x0=None, callback=None) -> tuple[np.ndarray, LinSolveStats]:
    """Preconditioned conjugate gradients for SPD ``A``.

    Stops when ``||b - A x|| <= tol * ||b||``.  ``stats.history`` records the
    relative residual after every iteration and ``callback(x)``, if given,
    sees every iterate.  Raises :class:`NotSPDError` on non-positive curvature.
    """
    m = A.matrix if isinstance(A, SparseOperator) else A
    b = np.asarray(b, dtype=float)
    nrm_b = float(np.linalg.norm(b))
    if max_iters is None:
        max_iters = 10 * b.shape[0]
    if nrm_b == 0.0:
        return np.zeros_like(b), LinSolveStats(0, 0.0, True, [0.0])
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - m @ x if x0 is not None else b.copy()
    res = float(np.linalg.norm(r)) / nrm_b
    history = [res]
    if res <= tol:
        return x, LinSolveStats(0, res, True, history)
    z = r.copy() if P is None else P.apply(r)
    p = z.copy()
    rz = float(r @ z)
    for it in range(1, max_iters + 1):
        Ap = m @ p
        curv = float(p @ Ap)
        if not math.isfinite(curv):
            raise FloatingPointError(f"CG overflowed at iteration {it}")
        if not curv > 0.0:
            raise NotSPDError(f"non-positive curvature p.Ap = {curv:.3e} at CG iteration {it}")
        alpha = rz / curv
        x += alpha * p
        r -= alpha * Ap
        if callback is not None:
            callback(x)
        res = float(np.linalg.norm(r)) / nrm_b
        history.append(res)
        if res <= tol:
            return x, LinSolveStats(it, res, True, history)
        z = r if P is None else P.apply(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, LinSolveStats(max_iters, res, False, history)


def _lu(A):
    m = _csr(A).tocsc()
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got {m.shape}")
    try:
        return m, spla.splu(m)
    except RuntimeError as exc:
        raise SingularMatrixError(str(exc)) from exc


def _checked_solve(m, lu, b):
    b = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(b)):
        raise FloatingPointError("right-hand side is non-finite")
    x = lu.solve(b)
    nb = np.linalg.norm(b)
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("LU solve produced non-finite values")
    if nb > 0:
        rel = np.linalg.norm(m @ x - b) / nb
        if not math.isfinite(rel):
            raise FloatingPointError("LU residual check overflowed")
        if not rel <= DIRECT_RESIDUAL_TOL:
            raise SingularMatrixError(f"LU solve residual {rel:.3e} exceeds {DIRECT_RESIDUAL_TOL:g}; "
                                      "matrix is singular or severely ill-conditioned")
    return x


def direct_solve(A, b) -> np.ndarray:
    m, lu = _lu(A)
    return _checked_solve(m, lu, b)


def solve_nonsymmetric(A, b) -> np.ndarray:
    """Sparse LU for the (generally nonsymmetric) Newton systems."""
    return direct_solve(A, b)


# -- Poisson solver strategies for the outer iteration -----------------------------

class PoissonSolver:
    """Solves ``-Delta_h v = rhs`` on a fixed grid; set-up happens once."""

    name = "abstract"
    requires_homogeneous_boundary = False

    def solve(self, rhs: np.ndarray) -> tuple[np.ndarray, LinSolveStats]:
        raise NotImplementedError


class DirectPoisson(PoissonSolver):
    name = "direct"

    def __init__(self, grid: Grid):
        self.matrix, self._lu = _lu(assemble_laplacian(grid))

    def solve(self, rhs):
        return _checked_solve(self.matrix, self._lu, rhs), LinSolveStats(1, 0.0, True)


class CGPoisson(PoissonSolver):
    def __init__(self, grid: Grid, preconditioner: str = "identity", tol: float = DEFAULT_CG_TOL,
                 max_iters: int | None = None):
        self.operator = assemble_laplacian(grid)
        self.tol = tol
        self.max_iters = 10 * grid.size if max_iters is None else max_iters
        if preconditioner == "identity":
            self.P, self.name = None, "cg"
        elif preconditioner == "ilu0":
            self.P, self.name = ilu0(self.operator), "pcg-ilu"
        elif preconditioner == "multigrid":
            self.P, self.name = multigrid_preconditioner(grid, self.operator), "pcg-mg"
        else:
            raise ValueError(f"unknown preconditioner {preconditioner!r}")

    def solve(self, rhs):
        x, stats = cg(self.operator, rhs, self.tol, self.max_iters, self.P)
        if not stats.converged:
            raise ArithmeticError(f"{self.name}: no convergence in {stats.iterations} iterations "
                                  f"(relative residual {stats.residual:.3e})")
        return x, stats


SOLVERS = ("direct", "cg", "pcg-ilu", "pcg-mg", "green")


def make_poisson_solver(name: str, grid: Grid, green_m: int = 50, cg_tol: float = DEFAULT_CG_TOL
                        ) -> PoissonSolver:
    if name == "direct":
        return DirectPoisson(grid)
    if name == "cg":
        return CGPoisson(grid, "identity", cg_tol)
    if name == "pcg-ilu":
        return CGPoisson(grid, "ilu0", cg_tol)
    if name == "pcg-mg":
        return CGPoisson(grid, "multigrid", cg_tol)
    if name == "green":
        from .green import GreenPoisson
        return GreenPoisson(grid, green_m)
    raise KeyError(f"unknown solver {name!r}; valid names: {', '.join(SOLVERS)}")
