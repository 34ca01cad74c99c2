"""Poisson updates through the truncated sine-series Green's function of the unit square."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid
from .linsolve import LinSolveStats, PoissonSolver

MAX_GREEN_N = 100
DEFAULT_M = 50


class GreenCapacityError(MemoryError):
    """The dense Green's matrix would be too large."""


def greens_value(x, x0, M: int = DEFAULT_M) -> float:
    """Partial sum of ``4 sum sin(m pi x) sin(n pi y) sin(m pi x0) sin(n pi y0) / (pi^2 (m^2 + n^2))``
    over ``1 <= m, n <= M``."""
    if M < 1:
        raise ValueError("truncation order M must be >= 1")
    m = np.arange(1, M + 1)
    sx = np.sin(m * np.pi * x[0]) * np.sin(m * np.pi * x0[0])
    sy = np.sin(m * np.pi * x[1]) * np.sin(m * np.pi * x0[1])
    denom = m[:, None] ** 2 + m[None, :] ** 2
    return float(4.0 * np.sum(np.outer(sx, sy) / denom) / np.pi ** 2)


@dataclass(frozen=True, eq=False)
class GreensMatrix:
    matrix: np.ndarray
    M: int
    n: int


def assemble_greens_matrix(grid: Grid, M: int = DEFAULT_M, block: int = 8) -> GreensMatrix:
    """Dense ``n^2 x n^2`` matrix of ``dx^2 * G_M(x_a; x_b)``.

    The trapezoidal weights are all ``dx^2``: the kernel vanishes on the
    boundary.  Built as ``Phi W Phi^T`` over blocks of ``y`` modes, where
    ``Phi`` holds products of sines at the nodes.
    """
    if grid.n > MAX_GREEN_N:
        need = (grid.size ** 2) * 8 / 2 ** 30
        raise GreenCapacityError(
            f"Green's function solver is limited to n <= {MAX_GREEN_N} "
            f"(n={grid.n} needs a dense {grid.size}x{grid.size} matrix, {need:.1f} GiB)")
    if M < 1:
        raise ValueError("truncation order M must be >= 1")
    modes = np.arange(1, M + 1)
    S = np.sin(np.pi * np.outer(grid.interior_coords, modes))  # S[j, m] = sin(m pi x_j)
    G = np.zeros((grid.size, grid.size))
    for start in range(0, M, block):
        ny = modes[start:start + block]
        Sy = S[:, start:start + block]
        # lexicographic row (k, j) -> Sy[k, q] * S[j, m]
        phi = np.einsum("kq,jm->kjqm", Sy, S).reshape(grid.size, -1)
        w = 4.0 / (np.pi ** 2 * (ny[:, None] ** 2 + modes[None, :] ** 2))
        G += (phi * w.ravel()) @ phi.T
    G *= grid.dx ** 2
    G = 0.5 * (G + G.T)
    return GreensMatrix(G, M, grid.n)


def apply_greens(Gm: GreensMatrix, rho: np.ndarray, Lambda: float) -> np.ndarray:
    """Update ``v`` solving ``Lambda * Delta v = -rho`` with ``v = 0`` on the boundary.

    The series kernel is the (positive) inverse of ``-Delta``, hence
    ``v = +G rho / Lambda``.
    """
    if Lambda == 0:
        raise ValueError("Lambda must be nonzero")
    return Gm.matrix @ np.asarray(rho, dtype=float) / Lambda


class GreenPoisson(PoissonSolver):
    name = "green"
    requires_homogeneous_boundary = True

    def __init__(self, grid: Grid, M: int = DEFAULT_M):
        self.greens = assemble_greens_matrix(grid, M)

    def solve(self, rhs):
        return apply_greens(self.greens, rhs, 1.0), LinSolveStats(1, 0.0, True)
