"""End-to-end validation suite.

Each check is a self-contained, seeded experiment with a hard pass/fail
verdict; the ``fast`` level covers the exactness and identity checks, the
``full`` level adds the statistical scaling, coverage and optimality
experiments.  The same checks back the acceptance test module and the
``validate`` CLI command.
"""

from __future__ import annotations

import filecmp
import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import statevec as sv
from .coefkit import CoefficientVector, decompose, f_plus_minus_exact, pnorm
from .costmodel import (
    GateCostModel,
    StrategyId,
    QAE_STRATEGIES,
    SAMPLING_STRATEGIES,
    recommend,
    sandwich_check,
)
from .dataset import (
    default_dataset,
    default_query_point,
    doubled_dataset,
    random_dataset,
)
from .estimate import GroverSpec, make_backend, qae_estimate, sample_probability
from .harness import (
    ExperimentPlan,
    bruteforce_allocation,
    emit,
    fit_loglog_slope,
    run_plan,
)
from .strategies import InferenceInstance, allocate_budget, infer


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _random_instance(rng: np.random.Generator) -> InferenceInstance:
    n = int(rng.integers(1, 5))
    n_points = int(rng.integers(1, 9))
    layers = int(rng.integers(1, 3))
    family = rng.choice(["angle_ry_cz", "angle_rzrx_ring"], p=[0.7, 0.3])
    zero_fraction = 0.15 if n_points > 2 else 0.0
    ds = random_dataset(
        rng, num_qubits=n, num_points=n_points, num_layers=layers,
        family=str(family), zero_fraction=zero_fraction,
    )
    x = tuple(rng.uniform(0.0, 2.0 * np.pi, size=n).tolist())
    return InferenceInstance(ds.feature_map, ds.alpha, ds.training, x)


def check_observable_encoding(num_instances: int = 200) -> tuple[bool, str]:
    """Exactness of the single-observable circuit against the reference sum."""
    rng = np.random.default_rng(11001)
    worst = 0.0
    for _ in range(num_instances):
        inst = _random_instance(rng)
        circ, meas = inst.aao
        state = sv.apply(circ, sv.zero_state(circ.width))
        worst = max(worst, abs(meas.expectation(state) - inst.exact))
    return worst <= 1e-10, f"max |expectation - exact| = {worst:.2e} over {num_instances} instances"


def check_amplitude_encoding(num_instances: int = 200) -> tuple[bool, str]:
    """Branch probabilities of the amplitude-encoding circuit vs exact f+/f-."""
    rng = np.random.default_rng(11002)
    worst = 0.0
    for _ in range(num_instances):
        inst = _random_instance(rng)
        enc = inst.amplitude_encoding
        state = sv.apply(enc.circuit, sv.zero_state(enc.circuit.width))
        p_plus = sv.projector_probability(state, enc.plus_projector)
        p_minus = sv.projector_probability(state, enc.minus_projector)
        f_plus, f_minus = f_plus_minus_exact(inst.decomp, inst.exact_kernels.tolist())
        worst = max(worst, abs(p_plus - f_plus), abs(p_minus - f_minus))
    return worst <= 1e-10, f"max branch-probability error = {worst:.2e}"


def _random_prep(rng: np.random.Generator) -> tuple[sv.Circuit, sv.ProjectorSpec]:
    width = int(rng.integers(2, 6))
    gates = []
    for _ in range(int(rng.integers(4, 20))):
        kind = rng.choice(["h", "rx", "ry", "rz", "cz", "cnot", "x"])
        q = int(rng.integers(width))
        if kind == "h":
            gates.append(sv.h(q))
        elif kind == "x":
            gates.append(sv.x(q))
        elif kind in ("rx", "ry", "rz"):
            angle = float(rng.uniform(0, 2 * np.pi))
            gates.append({"rx": sv.rx, "ry": sv.ry, "rz": sv.rz}[kind](q, angle))
        else:
            q2 = int(rng.integers(width - 1))
            q2 = q2 + 1 if q2 >= q else q2
            gates.append(sv.cz(q, q2) if kind == "cz" else sv.cnot(q, q2))
    prep = sv.circuit(gates, width, len(gates))
    n_constraints = int(rng.integers(1, 3))
    qubits = rng.choice(width, size=n_constraints, replace=False)
    good = sv.ProjectorSpec(tuple((int(q), int(rng.integers(2))) for q in qubits))
    return prep, good


def check_backend_equivalence(num_preps: int = 50, max_k: int = 8) -> tuple[bool, str]:
    """Closed-form vs full-statevector Grover dynamics on random preps."""
    rng = np.random.default_rng(11003)
    worst = 0.0
    for _ in range(num_preps):
        prep, good = _random_prep(rng)
        analytic = make_backend(GroverSpec(prep, good, "analytic2d"))
        full = make_backend(GroverSpec(prep, good, "fullstate"))
        for k in range(max_k + 1):
            worst = max(worst, abs(analytic.good_probability(k) - full.good_probability(k)))
    return worst <= 1e-9, f"max per-depth probability gap = {worst:.2e}"


def check_sampling_rate(trials: int = 200) -> tuple[bool, str]:
    """RMSE of the sampling estimator falls as shots^(-1/2)."""
    prep = sv.circuit([sv.ry(0, 1.2)], 1, 1)
    good = sv.ProjectorSpec(((0, 1),))
    p_true = math.sin(0.6) ** 2
    rng = np.random.default_rng(11004)
    points = []
    for exp in range(8, 17):
        shots = 2**exp
        errs = []
        for _ in range(trials):
            p_hat, _ = sample_probability(prep, good, shots, rng, probability=p_true)
            errs.append((p_hat - p_true) ** 2)
        points.append((shots, math.sqrt(np.mean(errs))))
    slope, stderr = fit_loglog_slope(points)
    return abs(slope + 0.5) <= 0.1, f"RMSE-vs-shots slope = {slope:.3f} +- {stderr:.3f}"


def check_qae_rate(trials_per_amp: int = 40) -> tuple[bool, str]:
    """RMSE of amplitude estimation falls as 1/queries.

    Pools several target amplitudes per grid point so schedule resonances at
    one amplitude do not distort the fit; delta is small enough that the
    estimator's admissible failure rate cannot dominate the RMSE.
    """
    good = sv.ProjectorSpec(((0, 1),))
    amplitudes = [0.3, 0.45, 0.6, 0.75, 0.9]
    backends = []
    for a in amplitudes:
        prep = sv.circuit([sv.ry(0, 2 * math.asin(a))], 1, 1)
        spec = GroverSpec(prep, good, "analytic2d")
        backends.append((a, spec, make_backend(spec)))
    points = []
    for eps in (0.02, 0.01, 0.005, 0.0025):
        sq, queries = [], []
        for ai, (a, spec, backend) in enumerate(backends):
            for seed in range(trials_per_amp):
                rng = np.random.default_rng(978 + seed * 31 + ai * 7777)
                est = qae_estimate(spec, eps, 0.01, rng, backend=backend)
                sq.append((est.value - a) ** 2)
                queries.append(est.counter.total_queries)
        points.append((float(np.mean(queries)), math.sqrt(np.mean(sq))))
    slope, stderr = fit_loglog_slope(points)
    return abs(slope + 1.0) <= 0.15, f"RMSE-vs-queries slope = {slope:.3f} +- {stderr:.3f}"


def check_precision_contract(trials: int = 500, epsilon: float = 0.05) -> tuple[bool, str]:
    """Every strategy lands within epsilon in at least 2/3 of seeded runs."""
    ds = default_dataset()
    x = default_query_point(ds)
    inst = InferenceInstance(ds.feature_map, ds.alpha, ds.training, x)
    coverages = {}
    for strategy in StrategyId:
        hits = 0
        for trial in range(trials):
            report = infer(strategy, inst, epsilon, seed=990_000 + trial)
            hits += report.abs_error <= epsilon
        coverages[strategy.value] = hits / trials
    worst = min(coverages, key=coverages.get)
    passed = all(c >= 2.0 / 3.0 for c in coverages.values())
    return passed, f"min coverage = {coverages[worst]:.3f} ({worst})"


def check_query_scaling() -> tuple[bool, str]:
    """Measured query counters scale as eps^-2 (sampling) and eps^-1 (QAE).

    Also checks that the sample-and-average scaling matches adaptive
    list-and-sum sampling to within 0.1, as the two are equivalent routes.
    """
    ds = default_dataset()
    x = default_query_point(ds)
    inst = InferenceInstance(ds.feature_map, ds.alpha, ds.training, x)
    eps_grid = (0.1, 0.05, 0.025, 0.0125)
    slopes = {}
    for strategy in StrategyId:
        trials = 40 if strategy in QAE_STRATEGIES else 3
        means = []
        for eps in eps_grid:
            qs = [
                infer(strategy, inst, eps, seed=550_000 + t).counter.total_queries
                for t in range(trials)
            ]
            means.append(float(np.mean(qs)))
        slope, _ = fit_loglog_slope(list(zip([1 / e for e in eps_grid], means)))
        slopes[strategy] = slope
    failures = []
    for strategy in SAMPLING_STRATEGIES:
        if abs(slopes[strategy] - 2.0) > 0.1:
            failures.append(f"{strategy.value}: {slopes[strategy]:.3f}")
    for strategy in QAE_STRATEGIES:
        if abs(slopes[strategy] - 1.0) > 0.15:
            failures.append(f"{strategy.value}: {slopes[strategy]:.3f}")
    gap = abs(slopes[StrategyId.SAMPLE_AVERAGE] - slopes[StrategyId.LS_ADAPTIVE_SAMPLING])
    if gap > 0.1:
        failures.append(f"sample-average vs adaptive-sampling slope gap {gap:.3f}")
    detail = ", ".join(f"{s.value}={slopes[s]:.2f}" for s in StrategyId)
    if failures:
        detail = "; ".join(failures)
    return not failures, detail


def check_n_independence(trials: int = 100, epsilon: float = 0.05) -> tuple[bool, str]:
    """All-at-once QAE query counts barely move when the term count doubles.

    The doubled instance duplicates every training point at half weight, so
    the 1-norm, the exact value and the branch amplitudes are unchanged and
    only the term count (hence the per-query circuit) grows.
    """
    rng = np.random.default_rng(4242)
    ds4 = random_dataset(rng, num_qubits=3, num_points=4, num_layers=2, l1_target=2.0)
    ds8 = doubled_dataset(ds4)
    x = default_query_point(ds4)
    means = []
    for seed_base, ds in ((60_000, ds4), (70_000, ds8)):
        inst = InferenceInstance(ds.feature_map, ds.alpha, ds.training, x)
        qs = [
            infer(StrategyId.AAO_QAE, inst, epsilon, seed=seed_base + t).counter.total_queries
            for t in range(trials)
        ]
        means.append(float(np.mean(qs)))
    change = abs(means[1] - means[0]) / means[0]
    return change < 0.10, f"mean queries {means[0]:.0f} (N=4) vs {means[1]:.0f} (N=8), change {change:.1%}"


def check_allocation_optimality(num_vectors: int = 10) -> tuple[bool, str]:
    """Brute-force integer search cannot beat the closed-form allocation by > 5%."""
    rng = np.random.default_rng(11009)
    worst_ratio = 1.0
    for _ in range(num_vectors):
        weights = rng.uniform(0.2, 1.0, size=3) * rng.choice([-1.0, 1.0], size=3)
        alpha = CoefficientVector.from_iterable((weights / np.abs(weights).sum()).tolist())
        decomp = decompose(alpha)
        for r, eps in ((1, 0.12), (2, 0.03)):
            ours = allocate_budget(decomp, eps, 1.0 / 3.0, r)
            m_max = 4 * max(ours.per_index)
            best = bruteforce_allocation(decomp, eps, 1.0 / 3.0, r, m_max=m_max)
            worst_ratio = max(worst_ratio, ours.total / best.total)
    return worst_ratio <= 1.05, f"worst total ratio closed-form/brute-force = {worst_ratio:.4f}"


def check_norm_sandwich(num_vectors: int = 1000) -> tuple[bool, str]:
    """Norm chain and the gate-cost ratio bounds hold on random weights."""
    rng = np.random.default_rng(11010)
    for i in range(num_vectors):
        n_terms = int(rng.integers(1, 65))
        if i % 3 == 0:
            weights = np.zeros(n_terms)
            weights[int(rng.integers(n_terms))] = rng.uniform(0.5, 3.0)
        elif i % 3 == 1:
            weights = np.full(n_terms, float(rng.uniform(0.1, 2.0)))
        else:
            weights = rng.standard_t(df=2, size=n_terms)
            if not np.any(weights):
                weights[0] = 1.0
        alpha = CoefficientVector.from_iterable(weights.tolist())
        l1, l23 = pnorm(alpha, 1.0), pnorm(alpha, 2.0 / 3.0)
        support = len(alpha.support)
        if not (l1 <= l23 * (1 + 1e-12) and l23 <= math.sqrt(support) * l1 * (1 + 1e-12)):
            return False, f"norm chain violated at trial {i}"
        model = GateCostModel(
            feature_gates=int(rng.integers(1, 200)),
            num_terms=n_terms,
            data_qubits=int(rng.integers(1, 13)),
        )
        lower, upper, ratio = sandwich_check(model, decompose(alpha))
        if not (lower - 1e-9 <= ratio <= upper + 1e-9):
            return False, f"ratio {ratio} outside [{lower}, {upper}] at trial {i}"
    return True, f"{num_vectors} random vectors inside all bounds"


def check_recommender() -> tuple[bool, str]:
    """Query winner is all-at-once QAE and gate winner adaptive list-and-sum QAE
    on a grid of instance shapes, as the arg-min of the exact formulas."""
    rng = np.random.default_rng(11011)
    tested = 0
    for n_terms in (1, 2, 3, 4, 8, 16, 32, 64):
        for shape in ("one-hot", "equal", "heavy"):
            if shape == "one-hot":
                weights = np.zeros(n_terms)
                weights[0] = 1.5
            elif shape == "equal":
                weights = np.full(n_terms, 1.2)
            else:
                weights = rng.lognormal(0.0, 1.0, size=n_terms) * rng.choice([-1, 1], n_terms)
                weights *= 2.0 / np.abs(weights).sum()
            decomp = decompose(CoefficientVector.from_iterable(weights.tolist()))
            for g, n in ((10, 4), (50, 8)):
                model = GateCostModel(feature_gates=g, num_terms=n_terms, data_qubits=n)
                for eps in (0.1, 0.05, 0.02):
                    tested += 1
                    if recommend(model, decomp, eps, "queries") is not StrategyId.AAO_QAE:
                        return False, f"query winner wrong at N={n_terms}, {shape}, eps={eps}"
                    if recommend(model, decomp, eps, "gates") is not StrategyId.LS_ADAPTIVE_QAE:
                        return False, f"gate winner wrong at N={n_terms}, {shape}, eps={eps}"
    return True, f"fixed winners on all {tested} grid points"


def check_benchmark_determinism() -> tuple[bool, str]:
    """Identical plans emit byte-identical files."""
    ds = default_dataset()
    plan = ExperimentPlan(
        dataset=ds,
        x=default_query_point(ds),
        strategies=(StrategyId.AAO_SAMPLING, StrategyId.AAO_QAE),
        epsilon_grid=(0.1, 0.05),
        trials=2,
        base_seed=31337,
    )
    with tempfile.TemporaryDirectory() as tmp:
        first = emit(run_plan(plan), Path(tmp) / "a")
        second = emit(run_plan(plan), Path(tmp) / "b")
        for fa, fb in zip(first, second):
            if not filecmp.cmp(fa, fb, shallow=False):
                return False, f"{fa.name} differs between identical runs"
    return True, f"{len(first)} files byte-identical across reruns"


_FAST_CHECKS: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
    ("observable-encoding-exact", check_observable_encoding),
    ("amplitude-encoding-exact", check_amplitude_encoding),
    ("grover-backend-equivalence", check_backend_equivalence),
    ("norm-and-sandwich-bounds", check_norm_sandwich),
    ("recommender-verdicts", check_recommender),
]

_FULL_CHECKS: list[tuple[str, Callable[[], tuple[bool, str]]]] = _FAST_CHECKS + [
    ("sampling-error-rate", check_sampling_rate),
    ("qae-error-rate", check_qae_rate),
    ("precision-coverage", check_precision_contract),
    ("query-epsilon-scaling", check_query_scaling),
    ("aao-qae-n-independence", check_n_independence),
    ("allocation-optimality", check_allocation_optimality),
    ("benchmark-determinism", check_benchmark_determinism),
]


def run_checks(level: str = "fast") -> list[CheckResult]:
    if level == "fast":
        checks = _FAST_CHECKS
    elif level == "full":
        checks = _FULL_CHECKS
    else:
        raise ValueError(f"unknown validation level {level!r}; use 'fast' or 'full'")
    results = []
    for name, fn in checks:
        start = time.perf_counter()
        passed, detail = fn()
        results.append(CheckResult(name, passed, detail, time.perf_counter() - start))
    return results
