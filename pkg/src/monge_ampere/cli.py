"""``ma-bench``: single runs, mesh/solver sweeps and L-scheme vs Newton comparisons.

Exit codes: 0 when every requested solve converged or stagnated at the
rounding floor (``run``) or the table was written (``sweep``, ``compare``),
2 when a ``run`` ended in ``max_iters`` or ``diverged``, 1 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

from .cases import CASES, EllipticityError, InitialGuess, case_by_name
from .green import MAX_GREEN_N, GreenCapacityError
from .grid import make_grid
from .iterate import (DIVERGED, SUCCESS, IterationError, LschemeConfig, SolveReport, _start,
                      lscheme_solve, newton_solve)
from .linsolve import SOLVERS

SCHEMES = ("lscheme", "newton")
HISTORY_COLUMNS = ("i", "update_l2", "res_l2", "res_inf", "lambda", "inner_iters", "wall_ms")
SWEEP_COLUMNS = ("n", "scheme", "solver", "status", "iterations", "total_wall_ms", "setup_ms",
                 "error_l2", "error_l2_unscaled", "error_inf", "mean_inner_iters")
COMPARE_COLUMNS = ("n", "lscheme_solver", "lscheme_status", "lscheme_iterations", "lscheme_wall_ms",
                   "newton_status", "newton_iterations", "newton_wall_ms",
                   "cg_mean_inner", "pcg_solver", "pcg_mean_inner", "pcg_cg_ratio")
# status recorded for cells the Green's solver cannot hold in memory
CAPACITY = "capacity"
ERROR = "error"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    case: str
    sigma: float
    mu: tuple[float, float]
    eps_s: float
    l: int
    sizes: tuple[int, ...]
    schemes: tuple[str, ...]
    solvers: tuple[str, ...]
    green_m: int
    init: str
    lscheme: LschemeConfig
    out: Path
    reps: int

    def make_case(self):
        return case_by_name(self.case, self.sigma, self.mu, self.eps_s, self.l)


def _split(values: Sequence[str]) -> list[str]:
    return [p for v in values for p in v.split(",") if p]


def _parse_mu(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"--mu expects X,Y, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise UsageError(f"--mu expects two numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ma-bench", description="Monge-Ampere L-scheme / Newton benchmark harness.")
    p.add_argument("command", choices=("run", "sweep", "compare"))
    p.add_argument("--case", default="gaussian", help=f"one of: {', '.join(CASES)}")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--mu", default="0.5,0.5", help="Gaussian centre as X,Y")
    p.add_argument("--eps-s", type=float, default=1e-3)
    p.add_argument("--l", type=int, default=12)
    p.add_argument("--n", nargs="+", required=True, help="grid sizes, comma or space separated")
    p.add_argument("--scheme", nargs="+", default=["lscheme"], help=f"one or more of: {', '.join(SCHEMES)}")
    p.add_argument("--solver", nargs="+", default=["pcg-mg"], help=f"one or more of: {', '.join(SOLVERS)}")
    p.add_argument("--green-m", type=int, default=50)
    p.add_argument("--init", default="convex:30", help="convex:C, saddle:C or exact")
    p.add_argument("--eta", type=float, default=1.5)
    p.add_argument("--tol", type=float, default=1e-16, help="stop when the update 2-norm falls below this")
    p.add_argument("--max-iters", type=int, default=1500)
    p.add_argument("--lambda-thresh", type=float, default=1e8)
    p.add_argument("--sign", choices=("convex", "concave"), default="convex")
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--reps", type=int, default=3, help="timing repetitions (median is reported)")
    return p


def parse_config(argv: Sequence[str]) -> ExperimentConfig:
    a = build_parser().parse_args(argv)
    try:
        sizes = tuple(int(s) for s in _split(a.n))
    except ValueError:
        raise UsageError(f"--n expects integers, got {' '.join(a.n)!r}") from None
    if not sizes or any(s < 1 for s in sizes):
        raise UsageError(f"grid sizes must be positive integers, got {list(sizes)}")
    schemes = tuple(_split(a.scheme))
    solvers = tuple(_split(a.solver))
    for s in schemes:
        if s not in SCHEMES:
            raise UsageError(f"unknown scheme {s!r}; valid names: {', '.join(SCHEMES)}")
    for s in solvers:
        if s not in SOLVERS:
            raise UsageError(f"unknown solver {s!r}; valid names: {', '.join(SOLVERS)}")
    if a.case not in CASES:
        raise UsageError(f"unknown case {a.case!r}; valid names: {', '.join(CASES)}")
    if a.reps < 1:
        raise UsageError("--reps must be >= 1")
    if a.green_m < 1:
        raise UsageError("--green-m must be >= 1")
    try:
        InitialGuess.parse(a.init)
        lcfg = LschemeConfig(eta=a.eta, lambda_thresh=a.lambda_thresh, delta_tol=a.tol,
                             i_max=a.max_iters, sign=a.sign, solver=solvers[0], green_m=a.green_m)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if a.command == "run" and (len(sizes) > 1 or len(schemes) > 1 or len(solvers) > 1):
        raise UsageError("run takes a single --n, --scheme and --solver; use sweep for lists")
    cfg = ExperimentConfig(command=a.command, case=a.case, sigma=a.sigma, mu=_parse_mu(a.mu),
                           eps_s=a.eps_s, l=a.l, sizes=sizes, schemes=schemes, solvers=solvers,
                           green_m=a.green_m, init=a.init, lscheme=lcfg, out=a.out, reps=a.reps)
    try:
        cfg.make_case()
    except (ValueError, EllipticityError) as exc:
        raise UsageError(str(exc)) from None
    return cfg


# -- solving ------------------------------------------------------------------

def _solve_once(cfg: ExperimentConfig, n: int, scheme: str, solver: str) -> SolveReport:
    case = cfg.make_case()
    grid = make_grid(n)
    init = InitialGuess.parse(cfg.init)
    if scheme == "newton":
        return newton_solve(case, grid, init, cfg.lscheme)
    lcfg = replace(cfg.lscheme, solver=solver)
    try:
        return lscheme_solve(case, grid, init, lcfg)
    except IterationError as exc:
        # an inner solve broke down: record the cell as diverged
        u, bc = _start(case, grid, init)
        return SolveReport("lscheme", solver, n, DIVERGED, exc.iteration, [], u, bc,
                           config={"solver": solver}, message=str(exc))


def solve_timed(cfg: ExperimentConfig, n: int, scheme: str, solver: str) -> SolveReport:
    """Solve ``reps`` times; non-timing fields come from the first run, timings are medians."""
    reports = [_solve_once(cfg, n, scheme, solver) for _ in range(cfg.reps)]
    first = reports[0]
    first.total_wall_ms = statistics.median(r.total_wall_ms for r in reports)
    first.setup_ms = statistics.median(r.setup_ms for r in reports)
    return first


def _cell(args) -> dict:
    cfg, n, scheme, solver = args
    label = "lu" if scheme == "newton" else solver
    row = {"n": n, "scheme": scheme, "solver": label}
    if scheme == "lscheme" and solver == "green" and n > MAX_GREEN_N:
        return {**row, "status": CAPACITY}
    try:
        r = solve_timed(cfg, n, scheme, solver)
    except GreenCapacityError:
        return {**row, "status": CAPACITY}
    except (ArithmeticError, ValueError) as exc:
        return {**row, "status": ERROR, "message": str(exc)}
    return {**row, "status": r.status, "iterations": r.iterations, "total_wall_ms": r.total_wall_ms,
            "setup_ms": r.setup_ms, "error_l2": r.error_l2, "error_l2_unscaled": r.error_l2_unscaled,
            "error_inf": r.error_inf, "mean_inner_iters": r.mean_inner_iters}


def _workers() -> int:
    raw = os.environ.get("MA_BENCH_THREADS", "1")
    try:
        k = int(raw)
    except ValueError:
        raise UsageError(f"MA_BENCH_THREADS must be a positive integer, got {raw!r}") from None
    if k < 1:
        raise UsageError(f"MA_BENCH_THREADS must be a positive integer, got {raw!r}")
    return k


def _map_cells(cells: list) -> list[dict]:
    """Evaluate sweep cells, in parallel when ``MA_BENCH_THREADS`` > 1; order is preserved."""
    k = min(_workers(), len(cells))
    if k <= 1:
        return [_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=k) as pool:
        return list(pool.map(_cell, cells))


# -- output ------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else "NA"
    return str(v)


def write_csv(path: Path, columns: Sequence[str], rows: Sequence[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])


def write_report(out: Path, report: SolveReport) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, allow_nan=False)
    write_csv(out / "history.csv", HISTORY_COLUMNS, [r.as_row() for r in report.history])


def _summary(r: SolveReport) -> str:
    def g(v):
        return "NA" if v is None or not math.isfinite(v) else f"{v:.4e}"
    return (f"{r.scheme}/{r.solver} n={r.n}: status={r.status} iterations={r.iterations} "
            f"error_l2={g(r.error_l2)} error_inf={g(r.error_inf)} wall_ms={r.total_wall_ms:.1f}")


# -- commands ------------------------------------------------------------------

def cmd_run(cfg: ExperimentConfig) -> int:
    n, scheme, solver = cfg.sizes[0], cfg.schemes[0], cfg.solvers[0]
    if scheme == "lscheme" and solver == "green" and n > MAX_GREEN_N:
        raise UsageError(f"the green solver is limited to n <= {MAX_GREEN_N}")
    report = solve_timed(cfg, n, scheme, solver)
    write_report(cfg.out, report)
    print(_summary(report))
    if report.message:
        print(report.message, file=sys.stderr)
    return 0 if report.status in SUCCESS else 2


def cmd_sweep(cfg: ExperimentConfig) -> int:
    cells = [(cfg, n, scheme, solver)
             for n in cfg.sizes for scheme in cfg.schemes
             for solver in (cfg.solvers if scheme == "lscheme" else cfg.solvers[:1])]
    rows = _map_cells(cells)
    write_csv(cfg.out / "sweep.csv", SWEEP_COLUMNS, rows)
    for row in rows:
        print(f"n={row['n']} {row['scheme']}/{row['solver']}: {row['status']}")
    return 0


def cmd_compare(cfg: ExperimentConfig) -> int:
    lsolver = cfg.solvers[0]
    pcg = lsolver if lsolver.startswith("pcg") else "pcg-mg"
    cells = []
    for n in cfg.sizes:
        cells += [(cfg, n, "lscheme", lsolver), (cfg, n, "newton", lsolver),
                  (cfg, n, "lscheme", "cg"), (cfg, n, "lscheme", pcg)]
    res = _map_cells(cells)
    rows = []
    for k, n in enumerate(cfg.sizes):
        ls, nw, cg, pc = res[4 * k:4 * k + 4]
        cg_mean, pc_mean = cg.get("mean_inner_iters"), pc.get("mean_inner_iters")
        ratio = pc_mean / cg_mean if cg_mean and pc_mean is not None else None
        rows.append({"n": n, "lscheme_solver": lsolver,
                     "lscheme_status": ls["status"], "lscheme_iterations": ls.get("iterations"),
                     "lscheme_wall_ms": ls.get("total_wall_ms"),
                     "newton_status": nw["status"], "newton_iterations": nw.get("iterations"),
                     "newton_wall_ms": nw.get("total_wall_ms"),
                     "cg_mean_inner": cg_mean, "pcg_solver": pcg, "pcg_mean_inner": pc_mean,
                     "pcg_cg_ratio": ratio})
        print(f"n={n}: lscheme {ls['status']} ({ls.get('iterations')}), "
              f"newton {nw['status']} ({nw.get('iterations')})")
    write_csv(cfg.out / "compare.csv", COMPARE_COLUMNS, rows)
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "compare": cmd_compare}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"ma-bench: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
