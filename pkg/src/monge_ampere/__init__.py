"""L-scheme fixed-point and Newton solvers for the Dirichlet Monge-Ampere
equation ``det D2u = f(x, grad u)`` on the unit square."""
from ._backend import BACKEND
from .cases import InitialGuess, ProblemCase, gaussian_case, initial_guess, oscillating_case
from .grid import BoundaryData, Grid, make_grid, sample_boundary, sample_interior
from .iterate import LschemeConfig, SolveReport, estimate_contraction, lscheme_solve, newton_solve

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BoundaryData", "Grid", "InitialGuess", "LschemeConfig", "ProblemCase", "SolveReport",
    "estimate_contraction", "gaussian_case", "initial_guess", "lscheme_solve", "make_grid",
    "newton_solve", "oscillating_case", "sample_boundary", "sample_interior",
]
