"""The seven inference strategies and the variance-optimal budget allocator.

Every strategy estimates the weighted kernel sum f(x) = sum_i a_i k(x, x_i)
to additive precision epsilon with success probability at least 1 - delta:

* list-and-sum (fixed / adaptive x sampling / amplitude estimation): loop
  over the support, estimate each kernel value with its budget M_i via the
  adjoint circuit U_dagger(x_i) U(x) and the all-zero data projector, and
  combine classically.  Fixed budgets give every term the same share;
  adaptive budgets come from ``allocate_budget``.
* all-at-once sampling: shots of the single-observable circuit, each worth
  +-l1 or 0.
* all-at-once amplitude estimation: two amplitude-estimation runs on the
  amplitude-encoding unitary, targeting the positive and negative branch
  amplitudes at precision epsilon / (4 l1) each, combined as
  l1 * (a_plus^2 - a_minus^2).
* sample-and-average: outer classical index draws i ~ p with a tiny inner
  kernel budget per draw (one shot by default).

Budgets use the constraint constant C = eps^2 / (2 ln(2/delta)); support
indices are always visited in ascending order so seeded runs replay exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .calibration import DEFAULTS, EstimatorConstants
from .coefkit import CoefDecomposition, CoefficientVector, decompose, pnorm
from .costmodel import GateCostModel, StrategyId, gates_per_query
from .estimate import (
    AnalyticGroverBackend,
    FullStateGroverBackend,
    GroverSpec,
    QueryCounter,
    qae_estimate,
)
from .featuremap import (
    DataPoint,
    FeatureMapSpec,
    TrainingSet,
    as_point,
    build_feature_circuit,
    f_exact,
    kernel_row_exact,
)
from .oracles import (
    ORACLE_O_DAGGER,
    ORACLE_U,
    ORACLE_W,
    all_at_once_circuit,
    amplitude_encoding_circuit,
)
from .statevec import (
    all_zero_projector,
    apply,
    concat,
    inverse,
    projector_probability,
    zero_state,
)

__all__ = [
    "StrategyId",
    "BudgetAllocation",
    "EstimateReport",
    "InferenceInstance",
    "allocate_budget",
    "infer",
    "sign_of",
]


@dataclass(frozen=True)
class BudgetAllocation:
    """Integer per-index budgets over the full coefficient vector.

    Indices with zero weight get budget 0 and are skipped by the loops; every
    supported index gets at least 1.
    """

    per_index: tuple[int, ...]
    total: int

    def __post_init__(self) -> None:
        if self.total != sum(self.per_index):
            raise ValueError("total must equal the sum of per-index budgets")


def constraint_constant(epsilon: float, delta: float) -> float:
    """The variance-budget constant C = eps^2 / (2 ln(2/delta))."""
    if epsilon <= 0:
        raise ValueError("precision must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("failure probability must lie in (0, 1)")
    return epsilon**2 / (2.0 * math.log(2.0 / delta))


def allocation_formula(decomp: CoefDecomposition, epsilon: float, delta: float, r: int) -> dict[int, float]:
    """Real-valued optimal budgets M_i = |a_i|^{2/(r+1)} (sum_j |a_j|^{2/(r+1)})^{1/r} / C^{1/r}."""
    if r not in (1, 2):
        raise ValueError("estimator rate r must be 1 (sampling) or 2 (amplitude estimation)")
    c = constraint_constant(epsilon, delta)
    mags = {i: abs(decomp.entry(i)) for i in decomp.support}
    power_sum = sum(m ** (2.0 / (r + 1)) for m in mags.values())
    scale = power_sum ** (1.0 / r) / c ** (1.0 / r)
    return {i: m ** (2.0 / (r + 1)) * scale for i, m in mags.items()}


def allocate_budget(
    decomp: CoefDecomposition, epsilon: float, delta: float, r: int
) -> BudgetAllocation:
    """Variance-optimal integer budgets satisfying sum_i a_i^2 / M_i^r <= C."""
    raw = allocation_formula(decomp, epsilon, delta, r)
    per_index = [0] * len(decomp)
    for i, m in raw.items():
        per_index[i] = max(1, math.ceil(m))
    c = constraint_constant(epsilon, delta)
    spent = sum(decomp.entry(i) ** 2 / per_index[i] ** r for i in decomp.support)
    if spent > c * (1 + 1e-9):
        raise AssertionError("allocation violates its variance constraint")
    return BudgetAllocation(tuple(per_index), sum(per_index))


def fixed_budget(
    decomp: CoefDecomposition,
    epsilon: float,
    delta: float,
    r: int,
    scale: float = 1.0,
) -> BudgetAllocation:
    """Uniform per-term budget ceil(scale * |a|_2^{2/r} / C^{1/r}) over the support."""
    if r not in (1, 2):
        raise ValueError("estimator rate r must be 1 or 2")
    c = constraint_constant(epsilon, delta)
    support = decomp.support
    alpha = CoefficientVector.from_iterable(decomp.entry(i) for i in support)
    l2 = pnorm(alpha, 2.0)
    per_term = max(1, math.ceil(scale * l2 ** (2.0 / r) / c ** (1.0 / r)))
    per_index = [0] * len(decomp)
    for i in support:
        per_index[i] = per_term
    return BudgetAllocation(tuple(per_index), per_term * len(support))


@dataclass
class EstimateReport:
    """Outcome of one inference run with full resource accounting."""

    strategy: StrategyId
    estimate: float
    exact: float
    epsilon_target: float
    delta: float
    counter: QueryCounter
    modeled_gates: int
    allocation: BudgetAllocation | None
    seed: int

    @property
    def abs_error(self) -> float:
        return abs(self.estimate - self.exact)


def sign_of(report: EstimateReport) -> int:
    """Classification output; an estimate of exactly 0 maps to +1."""
    return 1 if report.estimate >= 0.0 else -1


class InferenceInstance:
    """One inference problem (feature map, weights, training set, query point)
    with cached circuits and exact references shared across trials.

    Cached values are derived once from the oracle circuits' statevectors;
    the exact reference comes independently from pairwise state overlaps.
    The caches are read-only after first use and safe to share across trials.
    """

    def __init__(
        self,
        feature_map: FeatureMapSpec,
        alpha: CoefficientVector,
        training: TrainingSet,
        x: DataPoint,
    ):
        if len(training) != len(alpha):
            raise ValueError("one coefficient per training point required")
        self.feature_map = feature_map
        self.alpha = alpha
        self.training = training
        self.x = as_point(x)
        if feature_map.family != "identity" and len(self.x) != feature_map.data_dim:
            raise ValueError(
                f"query point has dimension {len(self.x)}, feature map expects "
                f"{feature_map.data_dim}"
            )
        self._kernel_probs: dict[int, float] = {}
        self._backends: dict[tuple, object] = {}

    @cached_property
    def decomp(self) -> CoefDecomposition:
        return decompose(self.alpha)

    @cached_property
    def exact(self) -> float:
        return f_exact(self.feature_map, self.alpha, self.training, self.x)

    @cached_property
    def exact_kernels(self) -> np.ndarray:
        return kernel_row_exact(self.feature_map, self.training, self.x)

    @cached_property
    def cost_model(self) -> GateCostModel:
        return GateCostModel(
            feature_gates=self.feature_map.gate_count,
            num_terms=len(self.training),
            data_qubits=self.feature_map.num_qubits,
        )

    def adjoint_circuit(self, i: int):
        """U_dagger(x_i) U(x) on the data register; good state is all zeros."""
        u_x = build_feature_circuit(self.feature_map, self.x)
        u_i = build_feature_circuit(self.feature_map, self.training.points[i])
        return concat(u_x, inverse(u_i))

    def kernel_probability(self, i: int) -> float:
        """Exact good probability of the adjoint circuit, cached per index."""
        if i not in self._kernel_probs:
            circ = self.adjoint_circuit(i)
            state = apply(circ, zero_state(circ.width))
            good = all_zero_projector(range(circ.width))
            self._kernel_probs[i] = min(max(projector_probability(state, good), 0.0), 1.0)
        return self._kernel_probs[i]

    @cached_property
    def aao(self):
        return all_at_once_circuit(self.feature_map, self.x, self.decomp, self.training)

    @cached_property
    def aao_outcome_probs(self) -> tuple[float, float]:
        circ, meas = self.aao
        state = apply(circ, zero_state(circ.width))
        return meas.outcome_probabilities(state)

    @cached_property
    def amplitude_encoding(self):
        return amplitude_encoding_circuit(self.feature_map, self.x, self.decomp, self.training)

    def grover_backend(self, key: tuple, prep, good, backend_name: str):
        cache_key = key + (backend_name,)
        if cache_key not in self._backends:
            cls = AnalyticGroverBackend if backend_name == "analytic2d" else FullStateGroverBackend
            self._backends[cache_key] = cls(prep, good)
        return self._backends[cache_key]


# per-shot oracle invocations for the sampling circuits
_ADJOINT_SHOT = {ORACLE_U: 2}
_AAO_SHOT = {ORACLE_U: 1, ORACLE_W: 1, ORACLE_O_DAGGER: 1}


def _ls_sampling(
    instance: InferenceInstance,
    budgets: BudgetAllocation,
    rng: np.random.Generator,
) -> tuple[float, QueryCounter]:
    counter = QueryCounter()
    estimate = 0.0
    for i in instance.decomp.support:
        shots = budgets.per_index[i]
        p = instance.kernel_probability(i)
        k_hat = rng.binomial(shots, p) / shots
        estimate += instance.decomp.entry(i) * k_hat
        counter.add_shots(_ADJOINT_SHOT, shots)
    return estimate, counter


def _ls_qae(
    instance: InferenceInstance,
    budgets: BudgetAllocation,
    delta: float,
    rng: np.random.Generator,
    backend_name: str,
    constants: EstimatorConstants,
) -> tuple[float, QueryCounter]:
    counter = QueryCounter()
    estimate = 0.0
    support = instance.decomp.support
    delta_term = delta / len(support)
    for i in support:
        eps_i = min(0.5, constants.qae_term_precision_scale / budgets.per_index[i])
        circ = instance.adjoint_circuit(i)
        good = all_zero_projector(range(circ.width))
        backend = instance.grover_backend(("ls", i), circ, good, backend_name)
        result = qae_estimate(
            GroverSpec(circ, good, backend_name),
            eps_i,
            delta_term,
            rng,
            shots_per_round=constants.qae_shots_per_round,
            min_ratio=constants.qae_min_depth_ratio,
            backend=backend,
        )
        estimate += instance.decomp.entry(i) * result.value**2
        counter.merge(result.counter)
    return estimate, counter


def _aao_sampling(
    instance: InferenceInstance,
    epsilon: float,
    delta: float,
    rng: np.random.Generator,
    constants: EstimatorConstants,
) -> tuple[float, QueryCounter]:
    l1 = instance.decomp.l1_norm
    shots = math.ceil(constants.aao_sampling_scale * l1**2 * math.log(2.0 / delta) / epsilon**2)
    p_plus, p_minus = instance.aao_outcome_probs
    rest = max(0.0, 1.0 - p_plus - p_minus)
    counts = rng.multinomial(shots, np.array([p_plus, p_minus, rest]) / (p_plus + p_minus + rest))
    estimate = l1 * (int(counts[0]) - int(counts[1])) / shots
    counter = QueryCounter()
    counter.add_shots(_AAO_SHOT, shots)
    return estimate, counter


def _aao_qae(
    instance: InferenceInstance,
    epsilon: float,
    delta: float,
    rng: np.random.Generator,
    backend_name: str,
    constants: EstimatorConstants,
) -> tuple[float, QueryCounter]:
    enc = instance.amplitude_encoding
    l1 = instance.decomp.l1_norm
    eps_amp = min(0.5, epsilon / (4.0 * l1))
    counter = QueryCounter()
    values = []
    for label, good in (("plus", enc.plus_projector), ("minus", enc.minus_projector)):
        backend = instance.grover_backend(("aao", label), enc.circuit, good, backend_name)
        result = qae_estimate(
            GroverSpec(enc.circuit, good, backend_name),
            eps_amp,
            delta / 2.0,
            rng,
            shots_per_round=constants.qae_shots_per_round,
            min_ratio=constants.qae_min_depth_ratio,
            backend=backend,
        )
        values.append(result.value)
        counter.merge(result.counter)
    estimate = l1 * (values[0] ** 2 - values[1] ** 2)
    return estimate, counter


def _sample_average(
    instance: InferenceInstance,
    epsilon: float,
    delta: float,
    rng: np.random.Generator,
    constants: EstimatorConstants,
) -> tuple[float, QueryCounter]:
    decomp = instance.decomp
    l1 = decomp.l1_norm
    outer = math.ceil(constants.sample_average_scale * l1**2 * math.log(2.0 / delta) / epsilon**2)
    inner = constants.sample_average_inner_shots
    support = decomp.support
    probs = np.array([decomp.probs[i] for i in support])
    draws = rng.multinomial(outer, probs / probs.sum())
    total = 0.0
    for idx, count in zip(support, draws):
        if count == 0:
            continue
        successes = rng.binomial(count * inner, instance.kernel_probability(idx))
        total += decomp.signs[idx] * successes / inner
    counter = QueryCounter()
    counter.add_shots(_ADJOINT_SHOT, outer * inner)
    return l1 * total / outer, counter


def infer(
    strategy: StrategyId,
    instance: InferenceInstance,
    epsilon: float,
    delta: float = 1.0 / 3.0,
    seed: int = 0,
    backend: str = "analytic2d",
    constants: EstimatorConstants = DEFAULTS,
) -> EstimateReport:
    """Run one inference strategy and report the estimate with its costs."""
    if not 0.0 < epsilon <= 0.5:
        raise ValueError(f"epsilon must be in (0, 0.5], got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    rng = np.random.default_rng(seed)
    allocation: BudgetAllocation | None = None

    if strategy is StrategyId.LS_FIXED_SAMPLING:
        budgets = fixed_budget(instance.decomp, epsilon, delta, r=1,
                               scale=constants.ls_fixed_budget_scale)
        estimate, counter = _ls_sampling(instance, budgets, rng)
    elif strategy is StrategyId.LS_ADAPTIVE_SAMPLING:
        allocation = allocate_budget(instance.decomp, epsilon, delta, r=1)
        estimate, counter = _ls_sampling(instance, allocation, rng)
    elif strategy is StrategyId.LS_FIXED_QAE:
        budgets = fixed_budget(instance.decomp, epsilon, delta, r=2,
                               scale=constants.ls_fixed_budget_scale)
        estimate, counter = _ls_qae(instance, budgets, delta, rng, backend, constants)
    elif strategy is StrategyId.LS_ADAPTIVE_QAE:
        allocation = allocate_budget(instance.decomp, epsilon, delta, r=2)
        estimate, counter = _ls_qae(instance, allocation, delta, rng, backend, constants)
    elif strategy is StrategyId.AAO_SAMPLING:
        estimate, counter = _aao_sampling(instance, epsilon, delta, rng, constants)
    elif strategy is StrategyId.AAO_QAE:
        estimate, counter = _aao_qae(instance, epsilon, delta, rng, backend, constants)
    elif strategy is StrategyId.SAMPLE_AVERAGE:
        estimate, counter = _sample_average(instance, epsilon, delta, rng, constants)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")

    modeled = gates_per_query(strategy, instance.cost_model) * counter.total_queries
    return EstimateReport(
        strategy=strategy,
        estimate=estimate,
        exact=instance.exact,
        epsilon_target=epsilon,
        delta=delta,
        counter=counter,
        modeled_gates=modeled,
        allocation=allocation,
        seed=seed,
    )
