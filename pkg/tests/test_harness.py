import math

import numpy as np
import pytest

from qkinfer.coefkit import CoefficientVector, decompose
from qkinfer.costmodel import StrategyId
from qkinfer.dataset import default_dataset, default_query_point
from qkinfer.harness import (
    CSV_HEADER,
    ExperimentPlan,
    bruteforce_allocation,
    derive_seed,
    emit,
    fit_loglog_slope,
    parse_csv,
    run_plan,
)
from qkinfer.strategies import allocate_budget, constraint_constant


def weights(*entries):
    return decompose(CoefficientVector.from_iterable(entries))


def small_plan(strategies, eps=(0.1,), trials=1, seed=7):
    ds = default_dataset()
    return ExperimentPlan(
        dataset=ds,
        x=default_query_point(ds),
        strategies=tuple(strategies),
        epsilon_grid=tuple(eps),
        trials=trials,
        base_seed=seed,
    )


class TestFitLoglogSlope:
    def test_quadratic(self):
        pairs = [(x, x**2) for x in (1.0, 2.0, 4.0, 8.0)]
        slope, stderr = fit_loglog_slope(pairs)
        assert slope == pytest.approx(2.0, abs=1e-12)
        assert stderr == pytest.approx(0.0, abs=1e-12)

    def test_inverse(self):
        pairs = [(x, 5.0 / x) for x in (1.0, 3.0, 9.0)]
        slope, _ = fit_loglog_slope(pairs)
        assert slope == pytest.approx(-1.0, abs=1e-12)

    def test_noisy_square_root(self, rng):
        xs = np.geomspace(1, 1e4, 12)
        ys = xs**0.5 * (1 + rng.uniform(-0.05, 0.05, size=12))
        slope, _ = fit_loglog_slope(list(zip(xs, ys)))
        assert abs(slope - 0.5) <= 0.1

    def test_too_few_points(self):
        with pytest.raises(ValueError, match="three points"):
            fit_loglog_slope([(1.0, 1.0), (2.0, 2.0)])

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            fit_loglog_slope([(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)])


class TestRunPlan:
    def test_row_count_single(self):
        result = run_plan(small_plan([StrategyId.AAO_SAMPLING]))
        assert len(result.rows) == 1

    def test_row_count_product(self):
        plan = small_plan(
            [StrategyId.AAO_SAMPLING, StrategyId.LS_FIXED_SAMPLING],
            eps=(0.1, 0.05),
            trials=3,
        )
        assert len(run_plan(plan).rows) == 12

    def test_rerun_identical(self):
        plan = small_plan([StrategyId.AAO_QAE], eps=(0.1, 0.05), trials=2)
        assert run_plan(plan) == run_plan(plan)

    def test_strategy_order_independence(self):
        a = run_plan(small_plan([StrategyId.AAO_SAMPLING, StrategyId.AAO_QAE], trials=2))
        b = run_plan(small_plan([StrategyId.AAO_QAE, StrategyId.AAO_SAMPLING], trials=2))
        by_strategy_a = {r.strategy: r for r in a.rows if r.seed}
        by_strategy_b = {r.strategy: r for r in b.rows if r.seed}
        assert by_strategy_a == by_strategy_b

    def test_exact_column_matches_reference(self):
        result = run_plan(small_plan([StrategyId.AAO_SAMPLING]))
        row = result.rows[0]
        assert row.abs_error == pytest.approx(abs(row.estimate - row.exact), abs=1e-15)

    def test_invalid_plan(self):
        with pytest.raises(ValueError, match="trial"):
            small_plan([StrategyId.AAO_SAMPLING], trials=0)
        with pytest.raises(ValueError, match="grid"):
            small_plan([StrategyId.AAO_SAMPLING], eps=(0.7,))

    def test_derive_seed_distinct(self):
        seeds = {
            derive_seed(1, s, e, t)
            for s in StrategyId
            for e in range(3)
            for t in range(5)
        }
        assert len(seeds) == len(StrategyId) * 3 * 5


class TestBruteforceAllocation:
    def test_single_coefficient_closed_form(self):
        d = weights(0.8)
        c = constraint_constant(0.2, 1 / 3)
        alloc = bruteforce_allocation(d, 0.2, 1 / 3, r=1, m_max=200)
        assert alloc.per_index[0] == math.ceil(0.8**2 / c)

    def test_symmetric_weights_equal_budgets(self):
        # a balanced optimum exists at these parameters; total-ties resolve
        # toward it
        d = weights(0.5, -0.5, 0.5)
        alloc = bruteforce_allocation(d, 0.3, 1 / 3, r=1, m_max=64)
        assert len(set(alloc.per_index)) == 1

    def test_never_beats_feasible_closed_form_by_much(self):
        d = weights(3.0, 1.0)
        ours = allocate_budget(d, 0.35, 1 / 3, r=1)
        best = bruteforce_allocation(d, 0.35, 1 / 3, r=1, m_max=4 * max(ours.per_index))
        assert best.total <= ours.total <= math.ceil(1.05 * best.total)

    def test_result_feasible(self):
        d = weights(1.0, -0.4, 0.2)
        eps, delta, r = 0.3, 1 / 3, 2
        alloc = bruteforce_allocation(d, eps, delta, r, m_max=40)
        spent = sum(d.entry(i) ** 2 / alloc.per_index[i] ** r for i in d.support)
        assert spent <= constraint_constant(eps, delta) * (1 + 1e-12)

    def test_infeasible_m_max(self):
        with pytest.raises(ValueError, match="feasible"):
            bruteforce_allocation(weights(1.0, 1.0), 0.01, 1 / 3, r=1, m_max=3)

    def test_too_many_terms(self):
        with pytest.raises(ValueError, match="at most 4"):
            bruteforce_allocation(weights(1, 1, 1, 1, 1), 0.3, 1 / 3, r=1, m_max=8)


class TestEmit:
    def test_csv_round_trip(self, tmp_path):
        result = run_plan(small_plan([StrategyId.AAO_SAMPLING], eps=(0.1, 0.05), trials=2))
        paths = emit(result, tmp_path, fmt="csv")
        rows = parse_csv(paths[0])
        assert tuple(rows) == result.rows

    def test_single_row_file(self, tmp_path):
        result = run_plan(small_plan([StrategyId.AAO_SAMPLING]))
        (path,) = emit(result, tmp_path, fmt="csv")
        lines = path.read_text().strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len(lines) == 2

    def test_float_precision_17_digits(self, tmp_path):
        result = run_plan(small_plan([StrategyId.AAO_SAMPLING]))
        (path,) = emit(result, tmp_path, fmt="csv")
        estimate_field = path.read_text().strip().split("\n")[1].split(",")[3]
        assert float(estimate_field) == result.rows[0].estimate

    def test_plotdata_cardinality(self, tmp_path):
        plan = small_plan(
            [StrategyId.AAO_SAMPLING, StrategyId.AAO_QAE],
            eps=(0.1, 0.08, 0.06, 0.05),
            trials=2,
        )
        paths = emit(run_plan(plan), tmp_path, fmt="plotdata")
        for path in paths:
            lines = path.read_text().strip().split("\n")
            assert lines[0] == "strategy,x,y,yerr"
            assert len(lines) == 1 + 2 * 4  # strategies x grid points

    def test_empty_result_rejected(self, tmp_path):
        from qkinfer.harness import ExperimentResult

        with pytest.raises(ValueError, match="empty"):
            emit(ExperimentResult((), {}), tmp_path)


def test_fullstate_backend_plan():
    ds = default_dataset()
    plan = ExperimentPlan(
        dataset=ds,
        x=default_query_point(ds),
        strategies=(StrategyId.AAO_QAE, StrategyId.LS_ADAPTIVE_QAE),
        epsilon_grid=(0.1,),
        trials=2,
        base_seed=5,
        backend="fullstate",
    )
    for row in run_plan(plan).rows:
        assert row.abs_error <= 0.1


def test_slope_fits_present_with_three_point_grid():
    plan = small_plan([StrategyId.AAO_SAMPLING], eps=(0.1, 0.05, 0.025), trials=2)
    result = run_plan(plan)
    slope, _ = result.slopes[StrategyId.AAO_SAMPLING]["queries_vs_inv_eps"]
    assert slope == pytest.approx(2.0, abs=0.05)
