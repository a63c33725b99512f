import math

import numpy as np
import pytest

from qkinfer import statevec as sv
from qkinfer.estimate import (
    AnalyticGroverBackend,
    FullStateGroverBackend,
    GroverSpec,
    QueryCounter,
    grover_good_probability,
    make_backend,
    median_amplify,
    qae_estimate,
    sample_probability,
)


def ry_prep(amplitude):
    circ = sv.circuit([sv.ry(0, 2 * math.asin(amplitude))], 1, 1)
    return GroverSpec(circ, sv.ProjectorSpec(((0, 1),)), "analytic2d")


class TestGroverGoodProbability:
    def test_quarter_rotation(self):
        # a = 1/2 means theta = pi/6; one iteration lands exactly on 1
        assert grover_good_probability(0.5, 1) == pytest.approx(1.0, abs=1e-12)

    def test_saturated_amplitude(self):
        for k in range(5):
            assert grover_good_probability(1.0, k) == pytest.approx(1.0, abs=1e-12)

    def test_k_zero_returns_probability(self):
        assert grover_good_probability(0.3, 0) == pytest.approx(0.09, abs=1e-12)

    def test_matches_fullstate_on_one_qubit(self):
        a = math.sin(math.pi / 8)
        spec = ry_prep(a)
        full = FullStateGroverBackend(spec.prep, spec.good)
        assert grover_good_probability(a, 1) == pytest.approx(
            full.good_probability(1), abs=1e-10
        )

    def test_out_of_range(self):
        with pytest.raises(ValueError, match="outside"):
            grover_good_probability(1.5, 0)
        with pytest.raises(ValueError, match="nonnegative"):
            grover_good_probability(0.5, -1)


class TestBackends:
    def test_equivalence_on_multiqubit_prep(self, rng):
        gates = [sv.h(0), sv.ry(1, 1.1), sv.cnot(0, 2), sv.rz(2, 0.4), sv.cz(1, 2)]
        prep = sv.circuit(gates, 3, len(gates))
        good = sv.ProjectorSpec(((0, 1), (2, 0)))
        analytic = AnalyticGroverBackend(prep, good)
        full = FullStateGroverBackend(prep, good)
        for k in range(9):
            assert analytic.good_probability(k) == pytest.approx(
                full.good_probability(k), abs=1e-10
            )

    def test_equivalence_on_amplitude_encoding_circuit(self, rng):
        # the 2D dynamics must hold on the real inference circuit, including
        # the dense prep completion and the flag qubit
        from qkinfer.coefkit import CoefficientVector, decompose
        from qkinfer.featuremap import FeatureMapSpec, TrainingSet
        from qkinfer.oracles import amplitude_encoding_circuit

        spec = FeatureMapSpec(num_qubits=2, num_layers=1)
        pts = [tuple(rng.uniform(0, 2 * np.pi, 2)) for _ in range(3)]
        training = TrainingSet.from_points(pts)
        alpha = CoefficientVector.from_iterable([0.9, -0.5, 0.3])
        enc = amplitude_encoding_circuit(
            spec, tuple(rng.uniform(0, 2 * np.pi, 2)), decompose(alpha), training
        )
        for good in (enc.plus_projector, enc.minus_projector):
            analytic = AnalyticGroverBackend(enc.circuit, good)
            full = FullStateGroverBackend(enc.circuit, good)
            for k in range(7):
                assert analytic.good_probability(k) == pytest.approx(
                    full.good_probability(k), abs=1e-10
                )

    def test_make_backend_dispatch(self):
        spec = ry_prep(0.4)
        assert isinstance(make_backend(spec), AnalyticGroverBackend)
        full_spec = GroverSpec(spec.prep, spec.good, "fullstate")
        assert isinstance(make_backend(full_spec), FullStateGroverBackend)

    def test_unknown_backend_rejected(self):
        spec = ry_prep(0.4)
        with pytest.raises(ValueError, match="backend"):
            GroverSpec(spec.prep, spec.good, "magic")


class TestSampleProbability:
    def test_deterministic_good_state(self, rng):
        prep = sv.circuit([sv.x(0)], 1, 1)
        p_hat, counter = sample_probability(prep, sv.ProjectorSpec(((0, 1),)), 100, rng)
        assert p_hat == 1.0
        assert counter.total_queries == 100

    def test_impossible_state(self, rng):
        prep = sv.circuit([], 1, 0)
        p_hat, _ = sample_probability(prep, sv.ProjectorSpec(((0, 1),)), 100, rng)
        assert p_hat == 0.0

    def test_uniform_within_binomial_band(self):
        # 6-sigma band for 1e5 shots at p = 0.5
        rng = np.random.default_rng(123)
        prep = sv.circuit([sv.h(0)], 1, 1)
        p_hat, _ = sample_probability(prep, sv.ProjectorSpec(((0, 1),)), 100_000, rng)
        assert abs(p_hat - 0.5) < 0.01

    def test_unbiased(self):
        rng = np.random.default_rng(5)
        prep = sv.circuit([sv.ry(0, 1.0)], 1, 1)
        p_true = math.sin(0.5) ** 2
        mean = np.mean(
            [sample_probability(prep, sv.ProjectorSpec(((0, 1),)), 64, rng)[0] for _ in range(3000)]
        )
        sem = math.sqrt(p_true * (1 - p_true) / (64 * 3000))
        assert abs(mean - p_true) < 5 * sem

    def test_variance_bounded_by_quarter_over_shots(self):
        # Var(p_hat) = p(1-p)/M <= 1/(4M); empirical check with slack for
        # the chi-squared spread of a 3000-sample variance estimate
        rng = np.random.default_rng(6)
        prep = sv.circuit([sv.ry(0, 1.0)], 1, 1)
        shots = 64
        estimates = np.array(
            [
                sample_probability(prep, sv.ProjectorSpec(((0, 1),)), shots, rng)[0]
                for _ in range(3000)
            ]
        )
        assert estimates.var(ddof=1) <= (1 + 0.1) / (4 * shots)

    def test_oracle_invocation_accounting(self, rng):
        prep = sv.circuit([sv.h(0)], 1, 1)
        _, counter = sample_probability(
            prep, sv.ProjectorSpec(((0, 1),)), 10, rng, oracle_invocations={"U": 2}
        )
        assert counter.counts == {"U": 20}
        assert counter.total_queries == 10

    def test_zero_shots_rejected(self, rng):
        prep = sv.circuit([sv.h(0)], 1, 1)
        with pytest.raises(ValueError, match="shot"):
            sample_probability(prep, sv.ProjectorSpec(((0, 1),)), 0, rng)


class TestQaeEstimate:
    def test_saturated_amplitude_every_seed(self):
        spec = ry_prep(1.0)
        backend = make_backend(spec)
        for seed in range(25):
            est = qae_estimate(spec, 0.01, 0.1, np.random.default_rng(seed), backend=backend)
            assert abs(est.value - 1.0) <= 0.01

    def test_coverage_at_published_point(self):
        # a=0.6, eps=0.01, delta=0.1: at least 90% of 500 seeded runs inside
        spec = ry_prep(0.6)
        backend = make_backend(spec)
        hits = 0
        for seed in range(500):
            est = qae_estimate(spec, 0.01, 0.1, np.random.default_rng(seed), backend=backend)
            hits += abs(est.value - 0.6) <= 0.01
        assert hits / 500 >= 0.9

    def test_query_counting_rule(self):
        # per shot at depth k: one prep application plus k iterations with one
        # prep and one adjoint each, so V exceeds V_dagger by the shot count
        spec = ry_prep(0.6)
        est = qae_estimate(spec, 0.05, 0.1, np.random.default_rng(0), shots_per_round=32)
        counts = est.counter.counts
        assert counts["V"] + counts["V_dagger"] == est.counter.total_queries
        assert (counts["V"] - counts["V_dagger"]) % 32 == 0
        assert counts["V"] > counts["V_dagger"]

    def test_replay_stable(self):
        spec = ry_prep(0.37)
        backend = make_backend(spec)
        a = qae_estimate(spec, 0.02, 0.1, np.random.default_rng(9), backend=backend)
        b = qae_estimate(spec, 0.02, 0.1, np.random.default_rng(9), backend=backend)
        assert a.value == b.value
        assert a.counter.counts == b.counter.counts
        assert a.counter.total_queries == b.counter.total_queries

    def test_queries_double_when_precision_halves(self):
        spec = ry_prep(0.6)
        backend = make_backend(spec)

        def mean_queries(eps):
            total = 0
            for seed in range(300):
                est = qae_estimate(spec, eps, 0.1, np.random.default_rng(seed), backend=backend)
                total += est.counter.total_queries
            return total / 300

        ratio = mean_queries(0.005) / mean_queries(0.01)
        assert 1.8 <= ratio <= 2.2

    def test_query_envelope(self):
        # total queries stay below the calibrated ceiling C * ln(1/delta)/eps
        from qkinfer.calibration import DEFAULTS

        worst = 0.0
        for amplitude in (0.05, 0.3, 0.6, 0.9, 0.99):
            spec = ry_prep(amplitude)
            backend = make_backend(spec)
            for eps in (0.05, 0.01, 0.0025):
                for delta in (0.05, 1 / 3):
                    for seed in range(10):
                        est = qae_estimate(
                            spec, eps, delta, np.random.default_rng(seed), backend=backend
                        )
                        ratio = est.counter.total_queries * eps / math.log(1 / delta)
                        worst = max(worst, ratio)
        assert worst <= DEFAULTS.qae_envelope

    def test_small_amplitude_warns(self):
        spec = ry_prep(0.001)
        est = qae_estimate(spec, 0.05, 0.1, np.random.default_rng(1))
        assert est.warning == "amplitude below precision regime"
        assert 0.0 <= est.value <= 1.0

    def test_parameter_validation(self):
        spec = ry_prep(0.5)
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError, match="epsilon"):
            qae_estimate(spec, 0.7, 0.1, rng)
        with pytest.raises(ValueError, match="delta"):
            qae_estimate(spec, 0.1, 0.9, rng)
        with pytest.raises(ValueError, match="shot"):
            qae_estimate(spec, 0.1, 0.1, rng, shots_per_round=0)
        with pytest.raises(ValueError, match="ratio"):
            qae_estimate(spec, 0.1, 0.1, rng, min_ratio=1.0)

    def test_fullstate_backend_end_to_end(self):
        spec = GroverSpec(ry_prep(0.6).prep, sv.ProjectorSpec(((0, 1),)), "fullstate")
        est = qae_estimate(spec, 0.05, 0.2, np.random.default_rng(3))
        assert abs(est.value - 0.6) <= 0.05


class TestQueryCounter:
    def test_qae_shot_accounting(self):
        counter = QueryCounter()
        counter.add_qae_shots(10, 3)
        assert counter.counts == {"V": 40, "V_dagger": 30}
        assert counter.total_queries == 70

    def test_merge(self):
        a = QueryCounter()
        a.add_shots({"U": 2}, 5)
        b = QueryCounter()
        b.add_qae_shots(2, 1)
        a.merge(b)
        assert a.total_queries == 5 + 6
        assert a.counts == {"U": 10, "V": 4, "V_dagger": 2}


class TestMedianAmplify:
    def test_single_repetition_is_single_run(self):
        values = iter([0.42])
        assert median_amplify(lambda rng: next(values), 1, np.random.default_rng(0)) == 0.42

    def test_constant_estimator(self):
        assert median_amplify(lambda rng: 7.0, 9, np.random.default_rng(0)) == 7.0

    def test_failure_rate_suppression(self):
        # estimator failing with probability 1/3, symmetrically high or low;
        # the median of 15 fails only when one side alone collects >= 8 runs
        rng = np.random.default_rng(17)

        def estimator(r):
            u = r.random()
            if u < 1 / 6:
                return 100.0
            if u < 1 / 3:
                return -100.0
            return 1.0

        trials = 1000
        failures = sum(
            abs(median_amplify(estimator, 15, rng)) > 1.0 for _ in range(trials)
        )
        # exact oracle: 2 * P(Bin(15, 1/6) >= 8), the two events being disjoint
        tail = sum(
            math.comb(15, k) * (1 / 6) ** k * (5 / 6) ** (15 - k) for k in range(8, 16)
        )
        oracle = 2 * tail
        assert oracle < 0.01
        assert failures / trials < 0.05
        band = 5 * math.sqrt(oracle * (1 - oracle) / trials)
        assert failures / trials <= oracle + band

    def test_even_repetitions_rejected(self):
        with pytest.raises(ValueError, match="odd"):
            median_amplify(lambda rng: 0.0, 4, np.random.default_rng(0))
