"""Seeded experiment runner: sweeps, slope fits, brute-force allocation, CSV.

Reproducibility contract: trial t of strategy s at grid position e runs with
a generator seeded by hashing (base_seed, s, e, t) through a seed sequence,
so results are independent of execution order and identical plans produce
byte-identical output files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .coefkit import CoefDecomposition
from .costmodel import StrategyId
from .dataset import Dataset
from .strategies import (
    BudgetAllocation,
    EstimateReport,
    InferenceInstance,
    constraint_constant,
    infer,
)

_STRATEGY_INDEX = {s: i for i, s in enumerate(StrategyId)}

CSV_HEADER = "strategy,epsilon,seed,estimate,exact,abs_error,total_queries,modeled_gates"


@dataclass(frozen=True)
class ExperimentPlan:
    dataset: Dataset
    x: tuple[float, ...]
    strategies: tuple[StrategyId, ...]
    epsilon_grid: tuple[float, ...]
    trials: int
    base_seed: int
    backend: str = "analytic2d"

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if not self.strategies:
            raise ValueError("need at least one strategy")
        if any(not 0.0 < e <= 0.5 for e in self.epsilon_grid):
            raise ValueError("precision grid values must lie in (0, 0.5]")


@dataclass(frozen=True)
class ResultRow:
    strategy: str
    epsilon: float
    seed: int
    estimate: float
    exact: float
    abs_error: float
    total_queries: int
    modeled_gates: int


@dataclass(frozen=True)
class ExperimentResult:
    rows: tuple[ResultRow, ...]
    slopes: dict[StrategyId, dict[str, tuple[float, float]]]


def derive_seed(base_seed: int, strategy: StrategyId, eps_index: int, trial: int) -> int:
    """Collision-resistant per-trial seed from the plan coordinates."""
    ss = np.random.SeedSequence(
        entropy=base_seed, spawn_key=(_STRATEGY_INDEX[strategy], eps_index, trial)
    )
    return int(ss.generate_state(1, np.uint64)[0])


def _row_from_report(report: EstimateReport, epsilon: float) -> ResultRow:
    return ResultRow(
        strategy=report.strategy.value,
        epsilon=epsilon,
        seed=report.seed,
        estimate=report.estimate,
        exact=report.exact,
        abs_error=report.abs_error,
        total_queries=report.counter.total_queries,
        modeled_gates=report.modeled_gates,
    )


def run_plan(plan: ExperimentPlan) -> ExperimentResult:
    instance = InferenceInstance(
        plan.dataset.feature_map, plan.dataset.alpha, plan.dataset.training, plan.x
    )
    rows: list[ResultRow] = []
    for strategy in plan.strategies:
        for eps_index, epsilon in enumerate(plan.epsilon_grid):
            for trial in range(plan.trials):
                seed = derive_seed(plan.base_seed, strategy, eps_index, trial)
                report = infer(
                    strategy, instance, epsilon, seed=seed, backend=plan.backend
                )
                rows.append(_row_from_report(report, epsilon))
    return ExperimentResult(tuple(rows), _fit_slopes(plan, rows))


def _fit_slopes(
    plan: ExperimentPlan, rows: Sequence[ResultRow]
) -> dict[StrategyId, dict[str, tuple[float, float]]]:
    """Per-strategy log-log fits over the grid: mean queries and RMSE vs 1/eps."""
    slopes: dict[StrategyId, dict[str, tuple[float, float]]] = {}
    if len(plan.epsilon_grid) < 3:
        return slopes
    for strategy in plan.strategies:
        inv_eps, mean_queries, rmse = [], [], []
        for epsilon in plan.epsilon_grid:
            sub = [
                r for r in rows if r.strategy == strategy.value and r.epsilon == epsilon
            ]
            inv_eps.append(1.0 / epsilon)
            mean_queries.append(float(np.mean([r.total_queries for r in sub])))
            rmse.append(float(np.sqrt(np.mean([r.abs_error**2 for r in sub]))))
        fits = {"queries_vs_inv_eps": fit_loglog_slope(list(zip(inv_eps, mean_queries)))}
        if all(v > 0 for v in rmse):
            fits["rmse_vs_inv_eps"] = fit_loglog_slope(list(zip(inv_eps, rmse)))
        slopes[strategy] = fits
    return slopes


def fit_loglog_slope(pairs: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Ordinary least squares slope of ln(y) on ln(x), with its standard error."""
    if len(pairs) < 3:
        raise ValueError("need at least three points for a slope fit")
    if any(px <= 0 or py <= 0 for px, py in pairs):
        raise ValueError("log-log fit requires positive values")
    lx = np.log([p[0] for p in pairs])
    ly = np.log([p[1] for p in pairs])
    lx_c = lx - lx.mean()
    sxx = float(np.dot(lx_c, lx_c))
    if sxx == 0.0:
        raise ValueError("x values must not be all equal")
    slope = float(np.dot(lx_c, ly) / sxx)
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    dof = len(pairs) - 2
    stderr = float(np.sqrt(np.dot(resid, resid) / dof / sxx)) if dof > 0 else 0.0
    return slope, stderr


def bruteforce_allocation(
    decomp: CoefDecomposition,
    epsilon: float,
    delta: float,
    r: int,
    m_max: int,
) -> BudgetAllocation:
    """Exhaustive integer minimizer of the total budget under the variance cap.

    Searches all per-index budgets in [1, m_max]; the last support coordinate
    is resolved in closed form as its minimal feasible value, which preserves
    exhaustiveness because the constraint is monotone in each budget.  Serves
    as the independence oracle for ``allocate_budget``; supports at most 4
    nonzero coefficients.
    """
    if r not in (1, 2):
        raise ValueError("estimator rate r must be 1 or 2")
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    support = decomp.support
    ns = len(support)
    if ns > 4:
        raise ValueError("brute-force search supports at most 4 nonzero coefficients")
    if ns >= 3 and m_max ** (ns - 1) > 5e7:
        raise ValueError(f"m_max={m_max} makes the search grid too large")
    c = constraint_constant(epsilon, delta)
    weights = np.array([decomp.entry(i) ** 2 for i in support])
    if float(np.sum(weights / m_max**r)) > c:
        raise ValueError(f"no feasible allocation with budgets up to m_max={m_max}")

    grid = np.arange(1, m_max + 1, dtype=float)
    if ns == 1:
        head_budget = np.zeros((1, 0))
        head_total = np.zeros(1)
        head_spend = np.zeros(1)
    else:
        mesh = np.meshgrid(*([grid] * (ns - 1)), indexing="ij")
        head_budget = np.stack([m.ravel() for m in mesh], axis=1)
        head_total = head_budget.sum(axis=1)
        head_spend = (weights[:-1] / head_budget**r).sum(axis=1)

    slack = c - head_spend
    feasible = slack > 0.0
    last = np.full(head_total.shape, np.inf)
    last[feasible] = np.ceil((weights[-1] / slack[feasible]) ** (1.0 / r))
    last = np.maximum(last, 1.0)
    valid = feasible & (last <= m_max)
    if not np.any(valid):
        raise ValueError(f"no feasible allocation with budgets up to m_max={m_max}")
    totals = np.where(valid, head_total + last, np.inf)
    # the integer optimum is often non-unique; break total-ties toward the
    # most balanced allocation (smallest sum of squares), deterministically
    squares = np.where(
        valid, (head_budget**2).sum(axis=1) if ns > 1 else 0.0, np.inf
    ) + np.where(valid, last**2, np.inf)
    candidates = np.flatnonzero(totals == totals.min())
    best = int(candidates[np.argmin(squares[candidates])])

    per_index = [0] * len(decomp)
    for pos, i in enumerate(support[:-1]):
        per_index[i] = int(head_budget[best, pos])
    per_index[support[-1]] = int(last[best])
    return BudgetAllocation(tuple(per_index), int(totals[best]))


def _fmt(value: float) -> str:
    return format(value, ".17g")


def emit(result: ExperimentResult, out_dir: str | Path, fmt: str = "both") -> list[Path]:
    """Write result files; returns the created paths.

    ``csv``: one row per trial under the fixed schema.  ``plotdata``: per
    strategy and grid point, (x, y, yerr) columns for the error-vs-budget
    curve and the queries-vs-precision curve.
    """
    if fmt not in ("csv", "plotdata", "both"):
        raise ValueError(f"unknown emit format {fmt!r}")
    if not result.rows:
        raise ValueError("refusing to emit an empty result")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    created: list[Path] = []

    def _write(path: Path, lines: list[str]) -> None:
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write("\n".join(lines) + "\n")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        created.append(path)

    if fmt in ("csv", "both"):
        lines = [CSV_HEADER]
        for r in result.rows:
            lines.append(
                f"{r.strategy},{_fmt(r.epsilon)},{r.seed},{_fmt(r.estimate)},"
                f"{_fmt(r.exact)},{_fmt(r.abs_error)},{r.total_queries},{r.modeled_gates}"
            )
        _write(out / "results.csv", lines)

    if fmt in ("plotdata", "both"):
        groups: dict[tuple[str, float], list[ResultRow]] = {}
        order: list[tuple[str, float]] = []
        for r in result.rows:
            key = (r.strategy, r.epsilon)
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(r)
        err_lines = ["strategy,x,y,yerr"]
        qry_lines = ["strategy,x,y,yerr"]
        for key in order:
            sub = groups[key]
            n = len(sub)
            queries = np.array([r.total_queries for r in sub], dtype=float)
            errors = np.array([r.abs_error for r in sub])
            rmse = float(np.sqrt(np.mean(errors**2)))
            err_sem = float(np.std(errors) / math.sqrt(n))
            qry_sem = float(np.std(queries) / math.sqrt(n))
            err_lines.append(
                f"{key[0]},{_fmt(float(queries.mean()))},{_fmt(rmse)},{_fmt(err_sem)}"
            )
            qry_lines.append(
                f"{key[0]},{_fmt(key[1])},{_fmt(float(queries.mean()))},{_fmt(qry_sem)}"
            )
        _write(out / "plot_error_vs_budget.csv", err_lines)
        _write(out / "plot_queries_vs_epsilon.csv", qry_lines)

    return created


def parse_csv(path: str | Path) -> list[ResultRow]:
    """Read back a results.csv written by ``emit``."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path} is not a results file (bad header)")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        rows.append(
            ResultRow(
                strategy=parts[0],
                epsilon=float(parts[1]),
                seed=int(parts[2]),
                estimate=float(parts[3]),
                exact=float(parts[4]),
                abs_error=float(parts[5]),
                total_queries=int(parts[6]),
                modeled_gates=int(parts[7]),
            )
        )
    return rows
