import math

import numpy as np
import pytest

from qkinfer.coefkit import CoefficientVector, decompose
from qkinfer.costmodel import (
    GateCostModel,
    StrategyId,
    gates_per_query,
    idx_width,
    mcx_cost,
    queries_theoretical,
    ranking,
    recommend,
    sandwich_check,
    strategy_from_name,
)


def weights(*entries):
    return decompose(CoefficientVector.from_iterable(entries))


class TestBasics:
    def test_mcx_cost(self):
        assert [mcx_cost(m) for m in (0, 1, 3)] == [1, 3, 7]
        with pytest.raises(ValueError):
            mcx_cost(-1)

    def test_idx_width(self):
        assert [idx_width(n) for n in (1, 2, 3, 4, 8, 9)] == [0, 1, 2, 2, 3, 4]

    def test_strategy_names_round_trip(self):
        for s in StrategyId:
            assert strategy_from_name(s.value) is s
        with pytest.raises(ValueError, match="unknown strategy"):
            strategy_from_name("grover-search")


class TestQueriesTheoretical:
    def test_aao_qae_closed_form(self):
        # Theta(l1/eps): l1 = 2, eps = 0.1 gives 20
        d = weights(1.0, -1.0)
        assert queries_theoretical(StrategyId.AAO_QAE, d, 0.1) == pytest.approx(20.0)

    def test_ls_fixed_sampling_closed_form(self):
        # N * l2^2 / eps^2 with N = 4, l2^2 = 1, eps = 0.1 gives 400
        d = weights(0.5, 0.5, 0.5, 0.5)
        assert queries_theoretical(StrategyId.LS_FIXED_SAMPLING, d, 0.1) == pytest.approx(400.0)

    def test_sample_average_matches_adaptive_sampling_formula(self):
        d = weights(0.6, -1.4)
        assert queries_theoretical(StrategyId.SAMPLE_AVERAGE, d, 0.1) == pytest.approx(
            queries_theoretical(StrategyId.LS_ADAPTIVE_SAMPLING, d, 0.1)
        ) == pytest.approx(400.0)

    def test_single_entry_formulas_coincide(self):
        d = weights(1.0)
        adaptive = queries_theoretical(StrategyId.LS_ADAPTIVE_QAE, d, 0.05)
        aao = queries_theoretical(StrategyId.AAO_QAE, d, 0.05)
        assert adaptive == pytest.approx(aao, rel=1e-12)

    def test_zero_entries_do_not_count(self):
        with_zero = weights(1.0, 0.0, -1.0)
        dense = weights(1.0, -1.0)
        for s in StrategyId:
            assert queries_theoretical(s, with_zero, 0.1) == pytest.approx(
                queries_theoretical(s, dense, 0.1), rel=1e-12
            )

    def test_invalid_epsilon(self):
        with pytest.raises(ValueError, match="positive"):
            queries_theoretical(StrategyId.AAO_QAE, weights(1.0), 0.0)


class TestGatesPerQuery:
    def test_list_and_sum_is_twice_g(self):
        model = GateCostModel(feature_gates=10, num_terms=4, data_qubits=2)
        for s in (
            StrategyId.LS_FIXED_SAMPLING,
            StrategyId.LS_ADAPTIVE_SAMPLING,
            StrategyId.LS_FIXED_QAE,
            StrategyId.LS_ADAPTIVE_QAE,
            StrategyId.SAMPLE_AVERAGE,
        ):
            assert gates_per_query(s, model) == 20

    def test_aao_sampling_plugin(self):
        # G + N + N*(G + 2*mcx(log2 N)) at G=10, N=4: 10 + 4 + 4*(10+10) = 94
        model = GateCostModel(feature_gates=10, num_terms=4, data_qubits=2)
        assert gates_per_query(StrategyId.AAO_SAMPLING, model) == 94

    def test_aao_qae_adds_flag_gates(self):
        model = GateCostModel(feature_gates=10, num_terms=4, data_qubits=2)
        assert gates_per_query(StrategyId.AAO_QAE, model) == 94 + mcx_cost(2) + 2

    def test_single_term_training_oracle(self):
        model = GateCostModel(feature_gates=7, num_terms=1, data_qubits=3)
        assert model.training_oracle_cost() == 7 + 2 * mcx_cost(0)

    def test_training_oracle_leading_term(self):
        # the exact formula stays within constant factors of N*(G + log2 N)
        for n_terms in (2, 8, 64, 512):
            for g in (1, 10, 100):
                model = GateCostModel(feature_gates=g, num_terms=n_terms, data_qubits=4)
                exact = model.training_oracle_cost()
                leading = n_terms * (g + max(1, math.log2(n_terms)))
                assert 1.0 <= exact / leading <= 6.0


class TestRecommend:
    def test_query_winner_fixed(self, rng):
        for _ in range(30):
            n_terms = int(rng.integers(1, 33))
            entries = rng.lognormal(0, 1, n_terms) * rng.choice([-1, 1], n_terms)
            entries *= float(rng.uniform(1, 4)) / np.abs(entries).sum()
            d = weights(*entries)
            model = GateCostModel(
                feature_gates=int(rng.integers(1, 100)),
                num_terms=n_terms,
                data_qubits=int(rng.integers(1, 10)),
            )
            eps = float(rng.uniform(0.01, 0.1))
            assert recommend(model, d, eps, "queries") is StrategyId.AAO_QAE
            assert recommend(model, d, eps, "gates") is StrategyId.LS_ADAPTIVE_QAE

    def test_single_term_gate_totals_ordered(self):
        # the all-at-once circuit keeps its oracle overhead even at N=1
        d = weights(1.0)
        model = GateCostModel(feature_gates=10, num_terms=1, data_qubits=3)
        ranked = dict(ranking(model, d, 0.1, "gates"))
        assert ranked[StrategyId.AAO_QAE] > ranked[StrategyId.LS_ADAPTIVE_QAE]

    def test_ranking_sorted(self):
        d = weights(0.3, -1.2, 0.8)
        model = GateCostModel(feature_gates=12, num_terms=3, data_qubits=2)
        for criterion in ("queries", "gates"):
            ranked = ranking(model, d, 0.05, criterion)
            totals = [t for _, t in ranked]
            assert totals == sorted(totals)
            assert len(ranked) == len(StrategyId)

    def test_bad_criterion(self):
        d = weights(1.0)
        model = GateCostModel(feature_gates=1, num_terms=1, data_qubits=1)
        with pytest.raises(ValueError, match="criterion"):
            recommend(model, d, 0.1, "depth")

    def test_gate_criterion_needs_gates(self):
        d = weights(1.0)
        model = GateCostModel(feature_gates=0, num_terms=1, data_qubits=1)
        with pytest.raises(ValueError, match="G >= 1"):
            recommend(model, d, 0.1, "gates")


class TestSandwich:
    def test_equal_magnitudes_hit_lower_end(self):
        # equal |a_i| maximizes the 2/3-norm, pushing the ratio to its floor
        d = weights(*([0.7] * 9))
        model = GateCostModel(feature_gates=11, num_terms=9, data_qubits=5)
        lower, upper, ratio = sandwich_check(model, d)
        assert ratio == pytest.approx(lower, rel=1e-9)

    def test_one_hot_hits_upper_end(self):
        d = weights(0.0, 0.0, 2.5, 0.0)
        model = GateCostModel(feature_gates=11, num_terms=4, data_qubits=5)
        lower, upper, ratio = sandwich_check(model, d)
        # support has one point, so the bounds collapse and meet the ratio
        assert ratio == pytest.approx(upper, rel=1e-9)

    def test_random_draws_stay_inside(self, rng):
        for _ in range(1000):
            n_terms = int(rng.integers(1, 40))
            entries = rng.standard_t(2, n_terms)
            if not entries.any():
                entries[0] = 1.0
            d = weights(*entries)
            model = GateCostModel(
                feature_gates=int(rng.integers(1, 150)),
                num_terms=n_terms,
                data_qubits=int(rng.integers(1, 12)),
            )
            lower, upper, ratio = sandwich_check(model, d)
            assert lower - 1e-9 <= ratio <= upper + 1e-9
