"""Expectation-value estimators with exact query accounting.

Two estimation primitives drive every inference strategy:

* ``sample_probability``: Bernoulli sampling of a projector probability,
  unbiased with variance at most 1/(4M) from M shots.
* ``qae_estimate``: amplitude estimation via adaptive Grover iteration.  The
  schedule grows the Grover depth geometrically; each round collects a shot
  batch at the current depth, converts a Hoeffding confidence interval on the
  measured probability sin^2((2k+1) theta) into an interval on theta, and
  intersects it with the running interval.  No phase estimation and no
  controlled applications of the prep are used.

Query counting rule (mirrored by the gate model in ``costmodel``): a sampling
shot is one query; an amplitude-estimation shot at Grover depth k charges one
prep application plus k iterations with one prep and one adjoint prep each,
so 2k+1 queries.  Per-oracle counts record each oracle's invocations per
shot, which for composite circuits can exceed the per-shot query count.

Grover dynamics can be evaluated by two interchangeable backends: the
``analytic2d`` backend computes the prep's good amplitude once from its
statevector and evolves sin^2((2k+1) theta) in closed form; the ``fullstate``
backend applies reflections (phase flips on the good subspace and on the
all-zero state) at statevector level.  Both agree to float precision because
the dynamics stay in the two-dimensional invariant subspace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .statevec import (
    Circuit,
    ProjectorSpec,
    all_zero_projector,
    apply,
    inverse,
    phase_flip,
    projector_probability,
    zero_state,
)

ORACLE_V = "V"
ORACLE_V_DAGGER = "V_dagger"

BACKENDS = ("analytic2d", "fullstate")


@dataclass
class QueryCounter:
    """Per-oracle invocation counts plus the strategy-level query total.

    ``total_queries`` follows the counting rule above (shots, or prep/adjoint
    applications); ``counts`` records raw oracle invocations and may sum to
    more than the total when one shot touches several oracles.
    """

    counts: dict[str, int] = field(default_factory=dict)
    total_queries: int = 0

    def add_shots(self, oracle_invocations: Mapping[str, int], shots: int) -> None:
        for name, mult in oracle_invocations.items():
            self.counts[name] = self.counts.get(name, 0) + mult * shots
        self.total_queries += shots

    def add_qae_shots(self, shots: int, depth: int) -> None:
        self.counts[ORACLE_V] = self.counts.get(ORACLE_V, 0) + shots * (depth + 1)
        self.counts[ORACLE_V_DAGGER] = self.counts.get(ORACLE_V_DAGGER, 0) + shots * depth
        self.total_queries += shots * (2 * depth + 1)

    def merge(self, other: "QueryCounter") -> None:
        for name, n in other.counts.items():
            self.counts[name] = self.counts.get(name, 0) + n
        self.total_queries += other.total_queries


@dataclass(frozen=True)
class GroverSpec:
    """A prep circuit, its good subspace, and the dynamics backend to use."""

    prep: Circuit
    good: ProjectorSpec
    backend: str = "analytic2d"

    def __post_init__(self) -> None:
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; choose from {BACKENDS}")


def grover_good_probability(a: float, k: int) -> float:
    """Good-subspace probability sin^2((2k+1) arcsin a) after k iterations."""
    if a < -1e-12 or a > 1.0 + 1e-12:
        raise ValueError(f"amplitude {a} outside [0, 1]")
    if k < 0:
        raise ValueError("iteration count must be nonnegative")
    theta = math.asin(min(max(a, 0.0), 1.0))
    return math.sin((2 * k + 1) * theta) ** 2


class AnalyticGroverBackend:
    """Closed-form two-dimensional Grover dynamics from the exact amplitude."""

    def __init__(self, prep: Circuit, good: ProjectorSpec):
        state = apply(prep, zero_state(prep.width))
        p = min(max(projector_probability(state, good), 0.0), 1.0)
        self.amplitude = math.sqrt(p)

    def good_probability(self, k: int) -> float:
        return grover_good_probability(self.amplitude, k)


class FullStateGroverBackend:
    """Exact statevector Grover iteration with phase-flip reflections."""

    def __init__(self, prep: Circuit, good: ProjectorSpec):
        self.prep = prep
        self.prep_inv = inverse(prep)
        self.good = good
        self.zero = all_zero_projector(range(prep.width))
        self._states = [apply(prep, zero_state(prep.width))]

    def _iterate(self, state):
        state = phase_flip(state, self.good)
        state = apply(self.prep_inv, state)
        state = phase_flip(state, self.zero)
        return apply(self.prep, state)

    def good_probability(self, k: int) -> float:
        while len(self._states) <= k:
            self._states.append(self._iterate(self._states[-1]))
        return projector_probability(self._states[k], self.good)


def make_backend(spec: GroverSpec):
    if spec.backend == "analytic2d":
        return AnalyticGroverBackend(spec.prep, spec.good)
    return FullStateGroverBackend(spec.prep, spec.good)


def sample_probability(
    circuit: Circuit,
    good: ProjectorSpec,
    shots: int,
    rng: np.random.Generator,
    oracle_invocations: Mapping[str, int] | None = None,
    probability: float | None = None,
) -> tuple[float, QueryCounter]:
    """Estimate a projector probability from ``shots`` Bernoulli samples.

    ``probability`` may carry a precomputed exact value for the circuit's
    good probability (callers running many trials on one instance); when
    absent it is computed from the statevector here.
    """
    if shots < 1:
        raise ValueError("need at least one shot")
    if probability is None:
        probability = projector_probability(apply(circuit, zero_state(circuit.width)), good)
    p = min(max(probability, 0.0), 1.0)
    ones = int(rng.binomial(shots, p))
    counter = QueryCounter()
    counter.add_shots(oracle_invocations or {"U": 1}, shots)
    return ones / shots, counter


@dataclass
class AmplitudeEstimate:
    """Result of one amplitude-estimation run."""

    value: float
    epsilon_target: float
    delta: float
    counter: QueryCounter
    interval: tuple[float, float]
    rounds: int
    warning: str | None = None


def _half_circle_flag(k_scale: int, t_lo: float, t_hi: float) -> bool | None:
    """Whether K*[t_lo, t_hi] mod 1 sits in the upper half circle.

    Returns True/False when the scaled interval fits one half (so the cosine
    inverts unambiguously), None when it straddles a boundary.
    """
    if k_scale * (t_hi - t_lo) > 0.5:
        return None
    frac_lo = k_scale * t_lo - math.floor(k_scale * t_lo)
    frac_hi = k_scale * t_hi - math.floor(k_scale * t_hi)
    if frac_lo <= frac_hi <= 0.5:
        return True
    if 0.5 <= frac_lo <= frac_hi:
        return False
    return None


def _select_depth(k_old: int, t_lo: float, t_hi: float, min_ratio: float) -> tuple[int, bool]:
    """Pick the Grover depth for the next round.

    Searches downward from the largest scaling K = 4k+2 that can fit the
    current interval into one half circle; jumps only when the depth grows
    by at least ``min_ratio``, otherwise keeps the old depth while it stays
    feasible.  K = 2 is always feasible for intervals inside [0, 1/4], so
    the search cannot come up empty.
    """
    width = t_hi - t_lo
    scale_old = 4 * k_old + 2
    k_scale_max = int(1.0 / (2.0 * width)) if width > 0.0 else scale_old
    k_scale = max(2, k_scale_max - (k_scale_max - 2) % 4)
    best: tuple[int, bool] | None = None
    while k_scale >= 2 and best is None:
        flag = _half_circle_flag(k_scale, t_lo, t_hi)
        if flag is not None:
            best = ((k_scale - 2) // 4, flag)
        k_scale -= 4
    if best is None:
        raise AssertionError("no feasible Grover depth; interval escaped [0, 1/4]")
    if 4 * best[0] + 2 >= min_ratio * scale_old:
        return best
    old_flag = _half_circle_flag(scale_old, t_lo, t_hi)
    if old_flag is not None:
        return k_old, old_flag
    return best


def _angle_fraction(p: float) -> float:
    # acos(1 - 2p) / (2 pi) maps p in [0,1] to a fraction in [0, 1/2]
    return math.acos(min(1.0, max(-1.0, 1.0 - 2.0 * p))) / (2.0 * math.pi)


def qae_estimate(
    spec: GroverSpec,
    epsilon: float,
    delta: float,
    rng: np.random.Generator,
    shots_per_round: int = 32,
    min_ratio: float = 1.5,
    backend=None,
) -> AmplitudeEstimate:
    """Estimate the good amplitude a to within ``epsilon`` w.p. >= 1 - delta.

    The run keeps a confidence interval for t = theta/(2 pi), theta = arcsin a,
    starting from [0, 1/4].  Each round measures a shot batch at the deepest
    feasible Grover depth, shrinks the interval, and stops once the theta
    interval is at most 2*epsilon wide, which pins the amplitude to epsilon.

    The regime a = Omega(epsilon) is assumed by the usual analysis; a result
    below epsilon is still returned (clamped) but flagged with a warning.
    """
    if not 0.0 < epsilon <= 0.5:
        raise ValueError(f"epsilon must be in (0, 0.5], got {epsilon}")
    if not 0.0 < delta <= 0.5:
        raise ValueError(f"delta must be in (0, 0.5], got {delta}")
    if shots_per_round < 1:
        raise ValueError("need at least one shot per round")
    if min_ratio <= 1.0:
        raise ValueError("depth ratio must exceed 1")
    if backend is None:
        backend = make_backend(spec)

    # Failure budget: one Hoeffding interval per depth level; repeated rounds
    # at one level reuse the accumulated counts, so the union bound over
    # levels is the binding one (depth grows geometrically up to ~pi/(2 eps)).
    depth_levels = max(1, int(math.log(math.pi / (2 * epsilon)) / math.log(min_ratio)) + 2)
    delta_round = delta / depth_levels
    log_term = math.log(2.0 / delta_round)

    counter = QueryCounter()
    t_lo, t_hi = 0.0, 0.25
    k = 0
    shots_at: dict[int, int] = {}
    ones_at: dict[int, int] = {}
    rounds = 0
    target_width = epsilon / math.pi

    while t_hi - t_lo > target_width:
        rounds += 1
        if rounds > 100_000:
            raise RuntimeError("amplitude estimation failed to converge")
        k, upper_half = _select_depth(k, t_lo, t_hi, min_ratio)
        k_scale = 4 * k + 2
        p_true = backend.good_probability(k)
        ones_at[k] = ones_at.get(k, 0) + int(rng.binomial(shots_per_round, p_true))
        shots_at[k] = shots_at.get(k, 0) + shots_per_round
        counter.add_qae_shots(shots_per_round, k)

        m = shots_at[k]
        p_hat = ones_at[k] / m
        half = math.sqrt(log_term / (2.0 * m))
        p_lo = max(0.0, p_hat - half)
        p_hi = min(1.0, p_hat + half)
        if upper_half:
            frac_lo = _angle_fraction(p_lo)
            frac_hi = _angle_fraction(p_hi)
        else:
            frac_lo = 1.0 - _angle_fraction(p_hi)
            frac_hi = 1.0 - _angle_fraction(p_lo)
        t_lo_new = (math.floor(k_scale * t_lo) + frac_lo) / k_scale
        t_hi_new = (math.floor(k_scale * t_hi) + frac_hi) / k_scale
        # Intersect with the running interval.  A nonempty intersection keeps
        # monotone shrinkage; an empty one signals that some confidence round
        # missed, so fall back to the union, which stays valid whichever
        # interval was right and lets later rounds recover.
        if max(t_lo, t_lo_new) <= min(t_hi, t_hi_new):
            t_lo = max(t_lo, t_lo_new)
            t_hi = min(t_hi, t_hi_new)
        else:
            t_lo = min(t_lo, t_lo_new)
            t_hi = max(t_hi, t_hi_new)

    a_lo = math.sin(2.0 * math.pi * t_lo)
    a_hi = math.sin(2.0 * math.pi * t_hi)
    value = min(1.0, max(0.0, 0.5 * (a_lo + a_hi)))
    warning = "amplitude below precision regime" if value < epsilon else None
    return AmplitudeEstimate(
        value=value,
        epsilon_target=epsilon,
        delta=delta,
        counter=counter,
        interval=(a_lo, a_hi),
        rounds=rounds,
        warning=warning,
    )


def median_amplify(
    estimator: Callable[[np.random.Generator], float],
    repetitions: int,
    rng: np.random.Generator,
) -> float:
    """Median of ``repetitions`` independent runs of the estimator.

    The repetition count must be odd so the median is one of the runs; the
    failure probability then decays exponentially in the repetitions whenever
    a single run succeeds with probability at least 2/3.
    """
    if repetitions < 1 or repetitions % 2 == 0:
        raise ValueError("repetitions must be odd and at least 1")
    values = sorted(estimator(rng) for _ in range(repetitions))
    return values[repetitions // 2]
