"""Uniform node layout on the unit square.

Interior unknowns are stored as flat length ``n*n`` arrays in lexicographic
order: ``x`` runs fastest, so node ``(j, k)`` (1-based) lives at
``(k - 1) * n + (j - 1)``.  Reshaping such a vector to ``(n, n)`` gives an
array indexed ``[k - 1, j - 1]``.

Boundary values live in :class:`BoundaryData`, separate from the interior.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable

import numpy as np

ScalarFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


class SampleError(ValueError):
    """A sampled function produced a non-finite value."""

    def __init__(self, message: str, node: tuple[int, int]):
        super().__init__(message)
        self.node = node


@dataclass(frozen=True)
class Grid:
    n: int

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"grid needs n >= 1 interior nodes per axis, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def dx(self) -> float:
        return 1.0 / (self.n + 1)

    @property
    def size(self) -> int:
        return self.n * self.n

    @property
    def coords(self) -> np.ndarray:
        """All ``n + 2`` node coordinates along one axis, boundary included."""
        return np.arange(self.n + 2) * self.dx

    @property
    def interior_coords(self) -> np.ndarray:
        return np.arange(1, self.n + 1) * self.dx

    def node(self, j: int, k: int) -> tuple[float, float]:
        return j * self.dx, k * self.dx

    def index(self, j: int, k: int) -> int:
        if not (1 <= j <= self.n and 1 <= k <= self.n):
            raise IndexError(f"({j}, {k}) is not an interior node of an n={self.n} grid")
        return (k - 1) * self.n + (j - 1)

    def jk(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.size:
            raise IndexError(f"index {index} out of range for n={self.n}")
        k, j = divmod(index, self.n)
        return j + 1, k + 1

    def interior_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Flat ``x`` and ``y`` arrays of the interior nodes, lexicographic."""
        x, y = np.meshgrid(self.interior_coords, self.interior_coords)
        return x.ravel(), y.ravel()

    def full_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """``(n+2, n+2)`` coordinate arrays indexed ``[k, j]``."""
        return np.meshgrid(self.coords, self.coords)


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Values on the ``4(n + 1)`` boundary nodes.

    ``bottom`` and ``top`` hold the rows ``k = 0`` and ``k = n + 1`` for
    ``j = 0..n+1`` (corners included); ``left`` and ``right`` hold the columns
    ``j = 0`` and ``j = n + 1`` for ``k = 1..n`` only, so each corner is
    stored exactly once.
    """

    bottom: np.ndarray
    top: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        for name in ("bottom", "top", "left", "right"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.left.shape[0]
        if self.bottom.shape != (n + 2,) or self.top.shape != (n + 2,) or self.right.shape != (n,):
            raise ValueError("inconsistent boundary edge lengths")

    @property
    def n(self) -> int:
        return self.left.shape[0]

    @classmethod
    def zeros(cls, grid: Grid) -> "BoundaryData":
        n = grid.n
        return cls(np.zeros(n + 2), np.zeros(n + 2), np.zeros(n), np.zeros(n))

    @classmethod
    def from_padded(cls, full: np.ndarray) -> "BoundaryData":
        return cls(full[0, :], full[-1, :], full[1:-1, 0], full[1:-1, -1])

    def values(self) -> np.ndarray:
        """Concatenated edge values, ``4(n+1)`` entries."""
        return np.concatenate([self.bottom, self.top, self.left, self.right])

    def pad(self, interior: np.ndarray | None = None) -> np.ndarray:
        """Return the ``(n+2, n+2)`` array ``[k, j]`` with this boundary.

        The interior is filled from ``interior`` (a length ``n*n`` field) or
        left at zero.
        """
        n = self.n
        full = np.zeros((n + 2, n + 2))
        full[0, :] = self.bottom
        full[-1, :] = self.top
        full[1:-1, 0] = self.left
        full[1:-1, -1] = self.right
        if interior is not None:
            full[1:-1, 1:-1] = np.asarray(interior).reshape(n, n)
        return full

    def __sub__(self, other: "BoundaryData") -> "BoundaryData":
        return BoundaryData(self.bottom - other.bottom, self.top - other.top,
                            self.left - other.left, self.right - other.right)

    def __neg__(self) -> "BoundaryData":
        return BoundaryData(-self.bottom, -self.top, -self.left, -self.right)

    def is_zero(self) -> bool:
        return not np.any(self.values())


def make_grid(n: int) -> Grid:
    return Grid(n)


def _check_finite(grid: Grid, values: np.ndarray, full: bool) -> None:
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size == 0:
        return
    if full:
        k, j = divmod(int(bad[0]), grid.n + 2)
    else:
        j, k = grid.jk(int(bad[0]))
    raise SampleError(f"non-finite sample {values[bad[0]]!r} at node (j={j}, k={k})", (j, k))


def _evaluate(g: ScalarFunction, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.asarray(g(x, y), dtype=float)
    return np.broadcast_to(out, x.shape).astype(float, copy=True)


def sample_interior(grid: Grid, g: ScalarFunction) -> np.ndarray:
    """Evaluate ``g(x, y)`` at every interior node, lexicographic order.

    ``g`` is called once with flat coordinate arrays and must broadcast.
    """
    x, y = grid.interior_mesh()
    values = _evaluate(g, x, y)
    _check_finite(grid, values, full=False)
    return values


def sample_boundary(grid: Grid, g: ScalarFunction) -> BoundaryData:
    X, Y = grid.full_mesh()
    full = _evaluate(g, X, Y)
    full[1:-1, 1:-1] = 0.0
    _check_finite(grid, full.ravel(), full=True)
    return BoundaryData.from_padded(full)


def field_to_csv(grid: Grid, interior: np.ndarray, bc: BoundaryData) -> str:
    """Dump a field with its boundary as ``x,y,u`` rows, ``k`` then ``j`` increasing."""
    full = bc.pad(interior)
    X, Y = grid.full_mesh()
    buf = io.StringIO()
    buf.write("x,y,u\n")
    for x, y, u in zip(X.ravel(), Y.ravel(), full.ravel()):
        buf.write(f"{x:.17g},{y:.17g},{u:.17g}\n")
    return buf.getvalue()


def field_from_csv(grid: Grid, text: str) -> tuple[np.ndarray, BoundaryData]:
    data = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)
    m = grid.n + 2
    if data.shape != (m * m, 3):
        raise ValueError(f"expected {m * m} rows of x,y,u, got {data.shape[0]}")
    full = data[:, 2].reshape(m, m)
    return full[1:-1, 1:-1].ravel().copy(), BoundaryData.from_padded(full)
