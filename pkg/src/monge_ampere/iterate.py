"""Outer iterations: the L-scheme fixed point and the Newton baseline.

Each L-scheme step solves one Poisson problem ``Lam * Delta_h v = -rho(u)``
for the update ``v`` with ``v = gamma - u`` on the boundary, then sets
``u <- u + v``.  ``Lam`` is re-chosen every step from the largest Hessian
eigenvalue on the grid.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import fdops
from .cases import InitialGuess, ProblemCase, initial_guess
from .grid import BoundaryData, Grid, sample_boundary
from .linsolve import PoissonSolver, SingularMatrixError, make_poisson_solver, solve_nonsymmetric

CONVERGED = "converged"
MAX_ITERS = "max_iters"
STAGNATED = "stagnated"
DIVERGED = "diverged"
SUCCESS = (CONVERGED, STAGNATED)


class IterationError(RuntimeError):
    def __init__(self, message, iteration):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration


@dataclass
class LschemeConfig:
    eta: float = 1.5
    lambda_thresh: float = 1e8
    lambda_floor: float = 1e-8
    delta_tol: float = 1e-16
    i_max: int = 1500
    sign: str = "convex"
    solver: str = "pcg-mg"
    green_m: int = 50
    cg_tol: float = 1e-10
    # stagnation: no new smallest update for this many steps while below the level
    stagnation_window: int = 50
    stagnation_level: float = 1e-12
    # Newton only: blow-up factor relative to the first update
    divergence_factor: float = 1e6

    def __post_init__(self):
        if not self.eta >= 1:
            raise ValueError(f"eta must be >= 1, got {self.eta}")
        if self.i_max < 1:
            raise ValueError("i_max must be >= 1")
        if self.sign not in ("convex", "concave"):
            raise ValueError(f"sign must be 'convex' or 'concave', got {self.sign!r}")
        if not (self.lambda_thresh > 0 and self.lambda_floor > 0 and self.delta_tol > 0):
            raise ValueError("lambda_thresh, lambda_floor and delta_tol must be positive")
        if self.lambda_floor > self.lambda_thresh:
            raise ValueError("lambda_floor exceeds lambda_thresh")

    @property
    def sign_factor(self) -> float:
        return 1.0 if self.sign == "convex" else -1.0


@dataclass
class StepRecord:
    i: int
    update_l2: float
    res_l2: float
    res_inf: float
    lam: Optional[float]
    inner_iters: int
    wall_ms: float

    def as_row(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


@dataclass
class SolveReport:
    scheme: str
    solver: str
    n: int
    status: str
    iterations: int
    history: list[StepRecord]
    u: np.ndarray = field(repr=False)
    bc: BoundaryData = field(repr=False)
    config: dict = field(default_factory=dict)
    error_l2: Optional[float] = None
    error_inf: Optional[float] = None
    error_l2_unscaled: Optional[float] = None
    setup_ms: float = 0.0
    total_wall_ms: float = 0.0
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status in SUCCESS

    @property
    def update_norms(self) -> np.ndarray:
        return np.array([r.update_l2 for r in self.history])

    @property
    def mean_inner_iters(self) -> float:
        if not self.history:
            return float("nan")
        return float(np.mean([r.inner_iters for r in self.history]))

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v

        return {
            "config": self.config,
            "scheme": self.scheme,
            "solver": self.solver,
            "n": self.n,
            "status": self.status,
            "iterations": self.iterations,
            "message": self.message,
            "history": [{k: clean(v) for k, v in r.as_row().items()} for r in self.history],
            "error_l2": clean(self.error_l2),
            "error_l2_unscaled": clean(self.error_l2_unscaled),
            "error_inf": clean(self.error_inf),
            "mean_inner_iters": clean(self.mean_inner_iters),
            "setup_ms": self.setup_ms,
            "total_wall_ms": self.total_wall_ms,
        }


def select_lambda(lambda_max_field: np.ndarray, cfg: LschemeConfig) -> float:
    """``sign * clip(min(eta * max(lambda_M), thresh), floor, thresh)``.

    In two dimensions the eigenvalue enters to the power ``d - 1 = 1``.
    The floor keeps ``Lam`` defined on iterates whose Hessians have no
    positive eigenvalue.
    """
    top = float(np.max(lambda_max_field))
    lam = min(cfg.eta * top, cfg.lambda_thresh)
    lam = min(max(lam, cfg.lambda_floor), cfg.lambda_thresh)
    return cfg.sign_factor * lam


def _norm2(v_int: np.ndarray, v_bnd: BoundaryData) -> float:
    return float(math.sqrt(float(v_int @ v_int) + float(np.sum(v_bnd.values() ** 2))))


class _Problem:
    """Grid-level quantities shared by every step of one solve."""

    def __init__(self, case: ProblemCase, grid: Grid, gamma: BoundaryData | None = None):
        self.case = case
        self.grid = grid
        self.gamma = sample_boundary(grid, case.gamma) if gamma is None else gamma
        self.x, self.y = grid.interior_mesh()
        self.f_fixed = None
        if not case.gradient_dependent:
            z = np.zeros_like(self.x)
            self.f_fixed = np.asarray(case.f(self.x, self.y, z, z), dtype=float)

    def residual(self, u, bc, h):
        if self.f_fixed is not None:
            f = self.f_fixed
        else:
            px, py = fdops.gradient(self.grid, u, bc)
            f = np.asarray(self.case.f(self.x, self.y, px, py), dtype=float)
        return fdops.hessian_det(h) - f

    def advection(self, u, bc):
        if not self.case.gradient_dependent:
            z = np.zeros_like(self.x)
            return z, z
        px, py = fdops.gradient(self.grid, u, bc)
        return self.case.grad_f_p(self.x, self.y, px, py)


def _lscheme_step(prob: _Problem, u, bc, cfg: LschemeConfig, solver: PoissonSolver, i: int):
    t0 = time.perf_counter()
    grid = prob.grid
    h = fdops.second_derivatives(grid, u, bc)
    rho = prob.residual(u, bc, h)
    if not np.all(np.isfinite(rho)):
        raise FloatingPointError("residual is non-finite")
    tau = fdops.hessian_trace(h)
    det = fdops.hessian_det(h)
    # concave mode measures the largest eigenvalue of -D2u
    lam_field = fdops.lambda_max(cfg.sign_factor * tau, det)
    lam = select_lambda(lam_field, cfg)
    v_bnd = prob.gamma - bc
    rhs = rho / lam
    if not v_bnd.is_zero():
        if solver.requires_homogeneous_boundary:
            raise IterationError(f"solver {solver.name!r} needs u = gamma on the boundary", i)
        rhs = rhs - fdops.boundary_lift(grid, fdops.laplacian_stencil(grid), v_bnd)
    try:
        v, stats = solver.solve(rhs)
    except FloatingPointError:
        raise
    except ArithmeticError as exc:
        raise IterationError(f"inner solve failed: {exc}", i) from exc
    rec = StepRecord(i=i, update_l2=_norm2(v, v_bnd),
                     res_l2=float(np.linalg.norm(rho)), res_inf=float(np.max(np.abs(rho))),
                     lam=lam, inner_iters=stats.iterations,
                     wall_ms=(time.perf_counter() - t0) * 1e3)
    return u + v, rec


def lscheme_step(u, bc: BoundaryData, case: ProblemCase, grid: Grid, cfg: LschemeConfig,
                 solver: PoissonSolver | str, i: int = 0):
    """One L-scheme update. Returns ``(u_next, record)``; the new boundary is the sampled gamma."""
    if isinstance(solver, str):
        solver = make_poisson_solver(solver, grid, cfg.green_m, cfg.cg_tol)
    return _lscheme_step(_Problem(case, grid), np.asarray(u, dtype=float), bc, cfg, solver, i)


def _start(case, grid, init):
    if isinstance(init, InitialGuess):
        return initial_guess(init, case, grid)
    u0, bc0 = init
    return np.array(u0, dtype=float), bc0


def _errors(report: SolveReport, case: ProblemCase, grid: Grid) -> None:
    if case.exact is None or not np.all(np.isfinite(report.u)):
        return
    x, y = grid.interior_mesh()
    e = report.u - case.exact(x, y)
    report.error_l2_unscaled = float(np.linalg.norm(e))
    report.error_l2 = report.error_l2_unscaled * grid.dx
    report.error_inf = float(np.max(np.abs(e)))


class _Monitor:
    def __init__(self, cfg: LschemeConfig):
        self.cfg = cfg
        self.best = math.inf
        self.best_i = 0

    def status(self, i: int, norm: float) -> Optional[str]:
        cfg = self.cfg
        if not math.isfinite(norm):
            return DIVERGED
        if norm <= cfg.delta_tol:
            return CONVERGED
        if norm < self.best:
            self.best, self.best_i = norm, i
        elif self.best <= cfg.stagnation_level and norm <= cfg.stagnation_level \
                and i - self.best_i >= cfg.stagnation_window:
            return STAGNATED
        return None


def lscheme_solve(case: ProblemCase, grid: Grid, init, cfg: LschemeConfig | None = None,
                  solver: PoissonSolver | str | None = None) -> SolveReport:
    """Iterate L-scheme steps until the update vanishes or a stopping status fires.

    ``init`` is an :class:`InitialGuess` or a ``(u0, bc0)`` pair.
    Terminations are reported through ``status``, never raised; inner
    solver failures raise :class:`IterationError`.
    """
    cfg = cfg or LschemeConfig()
    t_start = time.perf_counter()
    if solver is None:
        solver = cfg.solver
    if isinstance(solver, str):
        solver = make_poisson_solver(solver, grid, cfg.green_m, cfg.cg_tol)
    setup_ms = (time.perf_counter() - t_start) * 1e3
    prob = _Problem(case, grid)
    u, bc = _start(case, grid, init)
    if solver.requires_homogeneous_boundary and not (prob.gamma - bc).is_zero():
        raise ValueError(f"solver {solver.name!r} requires an initial guess equal to gamma on the boundary")

    history: list[StepRecord] = []
    monitor = _Monitor(cfg)
    status = MAX_ITERS
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, cfg.i_max + 1):
            try:
                u, rec = _lscheme_step(prob, u, bc, cfg, solver, i)
            except (fdops.InconsistentHessianError, FloatingPointError):
                status = DIVERGED
                break
            bc = prob.gamma
            history.append(rec)
            s = monitor.status(i, rec.update_l2)
            if s is None and not np.all(np.isfinite(u)):
                s = DIVERGED
            if s is not None:
                status = s
                break
    report = SolveReport("lscheme", solver.name, grid.n, status, len(history), history, u, bc,
                         config={**asdict(cfg), "solver": solver.name, "case": case.name,
                                 "case_params": _jsonable(case.params)},
                         setup_ms=setup_ms,
                         total_wall_ms=(time.perf_counter() - t_start) * 1e3)
    _errors(report, case, grid)
    return report


def newton_step(prob: _Problem, u, bc, i: int):
    t0 = time.perf_counter()
    grid = prob.grid
    h = fdops.second_derivatives(grid, u, bc)
    rho = prob.residual(u, bc, h)
    q = prob.advection(u, bc)
    stencil = fdops.newton_stencil(grid, h, q)
    A = fdops.assemble_newton_operator(grid, h, q)
    v_bnd = prob.gamma - bc
    rhs = rho
    if not v_bnd.is_zero():
        rhs = rhs - fdops.boundary_lift(grid, stencil, v_bnd)
    v = solve_nonsymmetric(A, rhs)
    rec = StepRecord(i=i, update_l2=_norm2(v, v_bnd), res_l2=float(np.linalg.norm(rho)),
                     res_inf=float(np.max(np.abs(rho))), lam=None, inner_iters=1,
                     wall_ms=(time.perf_counter() - t0) * 1e3)
    return u + v, rec


def newton_solve(case: ProblemCase, grid: Grid, init, cfg: LschemeConfig | None = None) -> SolveReport:
    """Plain (undamped) Newton on the discrete equations with sparse LU solves.

    Declared diverged when an update exceeds ``divergence_factor * (1 + |v^1|)``,
    values turn non-finite, or the Jacobian is singular.
    """
    cfg = cfg or LschemeConfig()
    t_start = time.perf_counter()
    prob = _Problem(case, grid)
    u, bc = _start(case, grid, init)
    history: list[StepRecord] = []
    monitor = _Monitor(cfg)
    status, message = MAX_ITERS, ""
    first = None
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, cfg.i_max + 1):
            try:
                u, rec = newton_step(prob, u, bc, i)
            except (SingularMatrixError, FloatingPointError, ValueError) as exc:
                status, message = DIVERGED, f"iteration {i}: {exc}"
                break
            bc = prob.gamma
            history.append(rec)
            if first is None:
                first = rec.update_l2
            s = monitor.status(i, rec.update_l2)
            if s is None and (rec.update_l2 > cfg.divergence_factor * (1.0 + first)
                              or not np.all(np.isfinite(u))):
                s = DIVERGED
            if s is not None:
                status = s
                break
    report = SolveReport("newton", "lu", grid.n, status, len(history), history, u, bc,
                         config={**asdict(cfg), "solver": "lu", "case": case.name,
                                 "case_params": _jsonable(case.params)},
                         total_wall_ms=(time.perf_counter() - t_start) * 1e3, message=message)
    _errors(report, case, grid)
    return report


def _jsonable(params: dict) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in params.items()}


def contraction_fit(norms: Sequence[float], floor: float = 1e-12) -> tuple[float, float]:
    """Fit ``log |v^i|`` against ``i`` over the middle half of the decay phase.

    The decay phase ends at the first norm below ``floor``; what follows is
    rounding noise.  Returns ``(q, r_squared)`` with ``q = exp(slope)``.
    """
    norms = np.asarray(norms, dtype=float)
    below = np.flatnonzero(norms <= floor)
    if below.size:
        norms = norms[:below[0] + 1]
    if norms.size < 10 or np.any(norms <= 0):
        raise ValueError(f"need at least 10 positive update norms, got {norms.size}")
    lo, hi = norms.size // 4, norms.size - norms.size // 4
    idx = np.arange(lo, hi, dtype=float)
    logs = np.log(norms[lo:hi])
    slope, icept = np.polyfit(idx, logs, 1)
    fit = slope * idx + icept
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    ss_res = float(np.sum((logs - fit) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(np.exp(slope)), r2


def estimate_contraction(report: SolveReport | Sequence[float]) -> float:
    norms = report.update_norms if isinstance(report, SolveReport) else report
    return contraction_fit(norms)[0]
