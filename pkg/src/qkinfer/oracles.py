"""Builders for the composite inference circuits.

Four constructions on top of the statevector engine:

* ``coefficient_state_prep`` loads the weight magnitudes as amplitudes on an
  index register with the sign on one extra qubit (sign +1 -> bit 0).
* ``training_set_oracle`` applies the inverse feature map selected by the
  index register: per index, an index-conditioned multi-controlled bitflip
  raises a flag qubit, the inverse feature circuit runs controlled on the
  flag, and the flag is uncomputed.  The training inputs are classically
  known, so the whole product is compiled offline; no quantum RAM involved.
* ``all_at_once_circuit`` chains feature map, coefficient prep and
  training-set oracle; measuring the all-zero data projector together with Z
  on the sign qubit then reproduces the full weighted kernel sum as a single
  expectation value, bounded by the weights' 1-norm.
* ``amplitude_encoding_circuit`` extends that circuit with two qubits whose
  (0,0) and (0,1) outcome probabilities equal the positive and negative
  parts of the normalized sum, ready for amplitude estimation.

Charged per-query costs: feature map G, coefficient prep N, training-set
oracle N*(G + 2*mcx(ceil(log2 N))); index register padded to a power of two
with zero-amplitude entries.  Training points are indexed from 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefkit import CoefDecomposition
from .costmodel import idx_width, mcx_cost
from .featuremap import FeatureMapSpec, TrainingSet, build_feature_circuit
from .statevec import (
    MAX_QUBITS,
    Circuit,
    Gate,
    ProjectorSpec,
    QuantumState,
    WidthOverflowError,
    cnot,
    controlled,
    embed,
    inverse,
    mcx,
    prep,
    projector_probability,
    x,
)

ORACLE_U = "U"
ORACLE_W = "W"
ORACLE_O_DAGGER = "O_dagger"
ORACLE_V = "V"
ORACLE_V_DAGGER = "V_dagger"


@dataclass(frozen=True)
class RegisterLayout:
    """Qubit assignment for one instance: data, index, sign, flag, and the
    two qubit-pair wires used only by the amplitude-encoding circuit."""

    data: tuple[int, ...]
    idx: tuple[int, ...]
    sign: int
    flag: int
    qp_trash: int | None
    qp_pm: int | None
    width: int


def make_layout(num_data: int, num_terms: int, with_qp: bool) -> RegisterLayout:
    w = idx_width(num_terms)
    width = num_data + w + 2 + (2 if with_qp else 0)
    if width > MAX_QUBITS:
        raise WidthOverflowError(
            f"instance needs {width} qubits (n={num_data}, N={num_terms}), max {MAX_QUBITS}"
        )
    data = tuple(range(num_data))
    idx = tuple(range(num_data, num_data + w))
    sign = num_data + w
    flag = num_data + w + 1
    qp_trash = num_data + w + 2 if with_qp else None
    qp_pm = num_data + w + 3 if with_qp else None
    return RegisterLayout(data, idx, sign, flag, qp_trash, qp_pm, width)


def unitary_from_zero_column(target: np.ndarray) -> np.ndarray:
    """Real unitary whose first column is ``target`` (a real unit vector).

    Built as the negated Householder reflection through e0 + target, which is
    numerically stable for every target including ones close to e0.
    """
    t = np.asarray(target, dtype=float)
    if abs(np.linalg.norm(t) - 1.0) > 1e-12:
        raise ValueError("state-prep target must be normalized")
    v = t.copy()
    v[0] += 1.0
    mat = 2.0 * np.outer(v, v) / np.dot(v, v) - np.eye(len(t))
    return mat.astype(complex)


@dataclass(frozen=True)
class StatePrepSpec:
    """Verified amplitude injection on a qubit subset, charged a flat cost."""

    qubits: tuple[int, ...]
    amplitudes: np.ndarray
    charged_cost: int

    def as_gate(self) -> Gate:
        matrix = unitary_from_zero_column(self.amplitudes)
        if not np.allclose(matrix[:, 0], self.amplitudes, atol=1e-12):
            raise AssertionError("state-prep completion failed to reproduce the target")
        return prep(self.qubits, matrix)


def coefficient_state_prep(decomp: CoefDecomposition, layout: RegisterLayout) -> StatePrepSpec:
    """Prep mapping |0..0> on idx+sign to sum_i sqrt(p_i) |i>|b_i>.

    The sign bit is b_i = (1 - s_i)/2, so Z on that qubit reads off the sign.
    Indices padded beyond the term count get amplitude zero.
    """
    n_terms = len(decomp)
    w = len(layout.idx)
    if n_terms > 2**w:
        raise ValueError(f"{n_terms} terms do not fit a {w}-qubit index register")
    if w + 1 > 10:
        # the dense unitary completion is quadratic in the register dimension
        raise WidthOverflowError(
            f"coefficient register of {w + 1} qubits exceeds the dense prep limit (10)"
        )
    target = np.zeros(2 ** (w + 1))
    for i, (p, s) in enumerate(zip(decomp.probs, decomp.signs)):
        b = 0 if s > 0 else 1
        target[i | (b << w)] = np.sqrt(p)
    qubits = layout.idx + (layout.sign,)
    return StatePrepSpec(qubits=qubits, amplitudes=target, charged_cost=n_terms)


def training_set_oracle(
    spec: FeatureMapSpec, training: TrainingSet, layout: RegisterLayout
) -> Circuit:
    """Index-selected product of inverse feature maps, with flag bookkeeping.

    Acts on basis states as |psi>|i> -> (U_dagger(x_i)|psi>)|i>; the flag
    qubit is raised and uncomputed per index and ends in |0> on every input.
    """
    n_terms = len(training)
    w = len(layout.idx)
    gates: list[Gate] = []
    for i in range(n_terms):
        polarity = tuple((i >> j) & 1 for j in range(w))
        select = mcx(layout.idx, layout.flag, polarity)
        u_inv = inverse(build_feature_circuit(spec, training.points[i]))
        body = controlled(embed(u_inv, layout.width), [layout.flag])
        gates.append(select)
        gates.extend(body.gates)
        gates.append(select)
    cost = n_terms * (spec.gate_count + 2 * mcx_cost(w))
    return Circuit(tuple(gates), layout.width, cost)


@dataclass(frozen=True)
class MeasurementSpec:
    """The single observable l1 * (|0><0| on data  x  I on idx  x  Z on sign).

    A single shot yields +l1 when the data register reads all zeros with
    sign bit 0, -l1 with sign bit 1, and 0 otherwise; every outcome is
    bounded by l1 in magnitude.
    """

    l1_norm: float
    data_qubits: tuple[int, ...]
    sign_qubit: int

    def outcome_probabilities(self, state: QuantumState) -> tuple[float, float]:
        """(P[data=0, sign=0], P[data=0, sign=1])."""
        base = tuple((q, 0) for q in self.data_qubits)
        p_plus = projector_probability(state, ProjectorSpec(base + ((self.sign_qubit, 0),)))
        p_minus = projector_probability(state, ProjectorSpec(base + ((self.sign_qubit, 1),)))
        return p_plus, p_minus

    def expectation(self, state: QuantumState) -> float:
        p_plus, p_minus = self.outcome_probabilities(state)
        return self.l1_norm * (p_plus - p_minus)


def all_at_once_circuit(
    spec: FeatureMapSpec,
    x_point,
    decomp: CoefDecomposition,
    training: TrainingSet,
) -> tuple[Circuit, MeasurementSpec]:
    """Circuit whose observable expectation equals the weighted kernel sum."""
    layout = make_layout(spec.num_qubits, len(training), with_qp=False)
    u_x = embed(build_feature_circuit(spec, x_point), layout.width)
    w_gate = coefficient_state_prep(decomp, layout).as_gate()
    o_dag = training_set_oracle(spec, training, layout)
    gates = u_x.gates + (w_gate,) + o_dag.gates
    cost = spec.gate_count + len(training) + o_dag.abstract_cost
    meas = MeasurementSpec(decomp.l1_norm, layout.data, layout.sign)
    return Circuit(gates, layout.width, cost), meas


@dataclass(frozen=True)
class AmplitudeEncoding:
    """Amplitude-encoding circuit with its two good-subspace projectors."""

    circuit: Circuit
    layout: RegisterLayout
    plus_projector: ProjectorSpec
    minus_projector: ProjectorSpec


def amplitude_encoding_circuit(
    spec: FeatureMapSpec,
    x_point,
    decomp: CoefDecomposition,
    training: TrainingSet,
) -> AmplitudeEncoding:
    """Unitary whose qubit-pair outcome (0,0) carries probability f_plus and
    (0,1) carries f_minus.

    After the all-at-once chain, a zero-controlled bitflip from the data
    register onto the trash qubit followed by an X leaves trash=0 exactly on
    the all-zero data branch, and a CNOT copies the sign qubit onto the
    plus/minus qubit.
    """
    layout = make_layout(spec.num_qubits, len(training), with_qp=True)
    u_x = embed(build_feature_circuit(spec, x_point), layout.width)
    w_gate = coefficient_state_prep(decomp, layout).as_gate()
    o_dag = training_set_oracle(spec, training, layout)
    tail = (
        mcx(layout.data, layout.qp_trash, polarity=(0,) * len(layout.data)),
        x(layout.qp_trash),
        cnot(layout.sign, layout.qp_pm),
    )
    gates = u_x.gates + (w_gate,) + o_dag.gates + tail
    cost = (
        spec.gate_count
        + len(training)
        + o_dag.abstract_cost
        + mcx_cost(len(layout.data))
        + 2
    )
    plus = ProjectorSpec(((layout.qp_trash, 0), (layout.qp_pm, 0)))
    minus = ProjectorSpec(((layout.qp_trash, 0), (layout.qp_pm, 1)))
    return AmplitudeEncoding(Circuit(gates, layout.width, cost), layout, plus, minus)


@dataclass(frozen=True)
class OracleBundle:
    """All oracle circuits for one instance, with their charged query costs."""

    layout: RegisterLayout
    u_x: Circuit
    w_alpha: StatePrepSpec
    o_dagger_s: Circuit
    v: Circuit | None
    charged_costs: dict[str, int]


def build_bundle(
    spec: FeatureMapSpec,
    x_point,
    decomp: CoefDecomposition,
    training: TrainingSet,
    with_v: bool = True,
) -> OracleBundle:
    layout = make_layout(spec.num_qubits, len(training), with_qp=with_v)
    u_x = build_feature_circuit(spec, x_point)
    w_alpha = coefficient_state_prep(decomp, layout)
    o_dag = training_set_oracle(spec, training, layout)
    v = None
    costs = {
        ORACLE_U: u_x.abstract_cost,
        ORACLE_W: w_alpha.charged_cost,
        ORACLE_O_DAGGER: o_dag.abstract_cost,
    }
    if with_v:
        v = amplitude_encoding_circuit(spec, x_point, decomp, training).circuit
        costs[ORACLE_V] = v.abstract_cost
    return OracleBundle(layout, u_x, w_alpha, o_dag, v, costs)
