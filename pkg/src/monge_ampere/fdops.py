"""Central-difference operators on the interior grid.

Matrices assembled here act on interior unknowns only; boundary values are
moved to the right-hand side by the caller (see :func:`boundary_lift`).
The Laplacian is stored negated, ``A = -Delta_h``, so it is SPD.  Solving
``A v = rho / Lam`` is the same as the update equation ``Lam Delta_h v = -rho``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from . import _backend
from .grid import BoundaryData, Grid


@dataclass(frozen=True, eq=False)
class HessianFields:
    uxx: np.ndarray
    uyy: np.ndarray
    uxy: np.ndarray

    @property
    def det(self) -> np.ndarray:
        return hessian_det(self)

    @property
    def trace(self) -> np.ndarray:
        return hessian_trace(self)


@dataclass(frozen=True, eq=False)
class SparseOperator:
    matrix: sp.csr_matrix
    symmetric: bool

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, v):
        return self.matrix @ v

    def to_matrix_market(self, target) -> None:
        """Write the matrix in Matrix Market coordinate format (1-based)."""
        scipy.io.mmwrite(target, self.matrix.tocoo(),
                         symmetry="symmetric" if self.symmetric else "general")


class InconsistentHessianError(ArithmeticError):
    """The eigenvalue radicand came out clearly negative."""


def _padded(grid: Grid, u: np.ndarray, bc: BoundaryData) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.size,) or bc.n != grid.n:
        raise ValueError(f"field of shape {u.shape} / boundary n={bc.n} do not match grid n={grid.n}")
    return bc.pad(u)


def second_derivatives(grid: Grid, u: np.ndarray, bc: BoundaryData) -> HessianFields:
    full = np.ascontiguousarray(_padded(grid, u, bc))
    uxx, uyy, uxy = _backend.hessian_stencils(full, grid.dx)
    return HessianFields(uxx, uyy, uxy)


def gradient(grid: Grid, u: np.ndarray, bc: BoundaryData) -> tuple[np.ndarray, np.ndarray]:
    full = _padded(grid, u, bc)
    h2 = 2.0 * grid.dx
    ux = (full[1:-1, 2:] - full[1:-1, :-2]) / h2
    uy = (full[2:, 1:-1] - full[:-2, 1:-1]) / h2
    return ux.ravel(), uy.ravel()


def hessian_det(h: HessianFields) -> np.ndarray:
    return h.uxx * h.uyy - h.uxy * h.uxy


def hessian_trace(h: HessianFields) -> np.ndarray:
    return h.uxx + h.uyy


def lambda_max(tau: np.ndarray, det: np.ndarray) -> np.ndarray:
    """Largest eigenvalue of each symmetric 2x2 Hessian from trace and determinant.

    The radicand ``tau**2 - 4 det`` equals ``(uxx - uyy)**2 + 4 uxy**2``, so
    rounding-level negatives are clamped to zero; anything below
    ``-1e-12 * max(1, tau**2)`` means the inputs did not come from one
    symmetric matrix.
    """
    tau = np.asarray(tau, dtype=float)
    det = np.asarray(det, dtype=float)
    rad = tau * tau - 4.0 * det
    tol = 1e-12 * np.maximum(1.0, tau * tau)
    bad = rad < -tol
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise InconsistentHessianError(
            f"negative eigenvalue radicand {rad[i]:.3e} at entry {i} (tau={tau[i]!r}, det={det[i]!r})")
    return 0.5 * (tau + np.sqrt(np.maximum(rad, 0.0)))


def residual(grid: Grid, u: np.ndarray, bc: BoundaryData, case, hessian: HessianFields | None = None
             ) -> np.ndarray:
    """Nodewise ``det(D2_h u) - f(x, grad_h u)``."""
    h = second_derivatives(grid, u, bc) if hessian is None else hessian
    x, y = grid.interior_mesh()
    if case.gradient_dependent:
        px, py = gradient(grid, u, bc)
    else:
        px = py = np.zeros_like(x)
    f = np.asarray(case.f(x, y, px, py), dtype=float)
    if not np.all(np.isfinite(f)):
        i = int(np.flatnonzero(~np.isfinite(f))[0])
        raise FloatingPointError(f"right-hand side is non-finite at node {grid.jk(i)}")
    return hessian_det(h) - f


# -- assembly ---------------------------------------------------------------

def _stencil_matrix(grid: Grid, weights: dict[tuple[int, int], np.ndarray]) -> sp.csr_matrix:
    """Assemble ``sum_w weights[(dj, dk)][p] * v[p + (dj, dk)]`` over interior rows.

    Entries that would reference a boundary node are dropped.
    """
    n = grid.n
    jj, kk = np.meshgrid(np.arange(1, n + 1), np.arange(1, n + 1))
    jj, kk = jj.ravel(), kk.ravel()
    rows, cols, vals = [], [], []
    for (dj, dk), w in weights.items():
        w = np.broadcast_to(np.asarray(w, dtype=float), (n * n,))
        tj, tk = jj + dj, kk + dk
        inside = (tj >= 1) & (tj <= n) & (tk >= 1) & (tk <= n)
        src = np.flatnonzero(inside)
        rows.append(src)
        cols.append((tk[inside] - 1) * n + (tj[inside] - 1))
        vals.append(w[inside])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    m = sp.csr_matrix((vals, (rows, cols)), shape=(n * n, n * n))
    m.sum_duplicates()
    m.sort_indices()
    return m


def laplacian_stencil(grid: Grid) -> dict[tuple[int, int], float]:
    """Weights of ``-Delta_h`` keyed by neighbour offset ``(dj, dk)``."""
    inv = 1.0 / grid.dx ** 2
    return {(0, 0): 4.0 * inv, (-1, 0): -inv, (1, 0): -inv, (0, -1): -inv, (0, 1): -inv}


def assemble_laplacian(grid: Grid) -> SparseOperator:
    m = _stencil_matrix(grid, laplacian_stencil(grid))
    return SparseOperator(m, symmetric=True)


def newton_stencil(grid: Grid, h: HessianFields, q: tuple[np.ndarray, np.ndarray]
                   ) -> dict[tuple[int, int], np.ndarray]:
    """Weights of ``-(cof(D2u) : D2_h v - q . grad_h v)`` keyed by offset.

    ``cof(D2u) = [[uyy, -uxy], [-uxy, uxx]]``, so the row applies ``uyy``
    to the xx stencil, ``uxx`` to the yy stencil and ``-2 uxy`` to the
    cross stencil.
    """
    inv = 1.0 / grid.dx ** 2
    inv4 = 0.25 * inv
    h2 = 1.0 / (2.0 * grid.dx)
    a, b, c = h.uyy, h.uxx, h.uxy
    qx, qy = (np.asarray(q[0], dtype=float), np.asarray(q[1], dtype=float))
    return {
        (0, 0): (2.0 * a + 2.0 * b) * inv,
        (-1, 0): -a * inv - qx * h2,
        (1, 0): -a * inv + qx * h2,
        (0, -1): -b * inv - qy * h2,
        (0, 1): -b * inv + qy * h2,
        # -(-2c) * cross stencil, cross = (v[-1,-1] - v[-1,+1] - v[+1,-1] + v[+1,+1]) / 4dx^2
        (-1, -1): 2.0 * c * inv4,
        (1, 1): 2.0 * c * inv4,
        (-1, 1): -2.0 * c * inv4,
        (1, -1): -2.0 * c * inv4,
    }


def assemble_newton_operator(grid: Grid, h: HessianFields, q: tuple[np.ndarray, np.ndarray]
                             ) -> SparseOperator:
    return SparseOperator(_stencil_matrix(grid, newton_stencil(grid, h, q)), symmetric=False)


def boundary_lift(grid: Grid, stencil: dict[tuple[int, int], np.ndarray], bc: BoundaryData
                  ) -> np.ndarray:
    """Contribution of boundary values to each interior row of a stencil operator.

    For ``L v = A v_int + lift``, returns ``lift``; callers solve
    ``A v_int = rhs - lift``.
    """
    n = grid.n
    full = bc.pad()
    out = np.zeros((n, n))
    for (dj, dk), w in stencil.items():
        if (dj, dk) == (0, 0):
            continue
        shifted = full[1 + dk:n + 1 + dk, 1 + dj:n + 1 + dj]
        out += np.broadcast_to(np.asarray(w, dtype=float), (n * n,)).reshape(n, n) * shifted
    return out.ravel()
