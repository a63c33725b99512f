"""Dense complex statevector engine for up to 16 qubits.

Conventions, fixed once and used by every builder on top of this engine:

* Little-endian basis indexing: qubit 0 is the least significant bit of the
  basis-state index, so ``|q1 q0> = |10>`` has index 2.
* Any gate may carry control qubits, each with a polarity bit: a 1-control
  fires when the control qubit is |1>, a 0-control when it is |0>.
* A multi-controlled bitflip (MCX) with any number of controls is simulated
  exactly as one primitive; only the gate-cost model prices it (2m+1 for m
  controls, see ``costmodel``).
* PREP gates carry an explicit dense unitary on a small qubit subset.  In a
  multi-qubit matrix, ``targets[0]`` is the least significant bit of the
  row/column index.

Circuits are immutable; ``apply`` returns a fresh state.  A circuit's
``abstract_cost`` is whatever its builder charged, never recomputed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 16
NORM_TOL = 1e-12

ROTATION_KINDS = ("RX", "RY", "RZ")
GATE_KINDS = ROTATION_KINDS + ("H", "X", "Z", "CZ", "CNOT", "MCX", "PREP")

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_H = np.array([[_INV_SQRT2, _INV_SQRT2], [_INV_SQRT2, -_INV_SQRT2]], dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class WidthOverflowError(RuntimeError):
    """Raised when a register would exceed the 16-qubit simulator limit."""


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    polarity: tuple[int, ...] = ()
    angle: float | None = None
    matrix: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.controls) != len(self.polarity):
            raise ValueError("one polarity bit required per control")
        if any(b not in (0, 1) for b in self.polarity):
            raise ValueError("control polarity bits must be 0 or 1")
        qubits = self.targets + self.controls
        if len(set(qubits)) != len(qubits):
            raise ValueError("target and control qubits must be disjoint")
        if any(q < 0 for q in qubits):
            raise ValueError("qubit indices must be nonnegative")
        if self.kind in ROTATION_KINDS and self.angle is None:
            raise ValueError(f"{self.kind} requires an angle")
        if self.kind == "PREP" and self.matrix is None:
            raise ValueError("PREP requires an explicit matrix")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets + self.controls

    def base_matrix(self) -> np.ndarray:
        """Unitary applied on ``targets`` when all controls match."""
        if self.kind == "RX":
            c, s = math.cos(self.angle / 2), math.sin(self.angle / 2)
            return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
        if self.kind == "RY":
            c, s = math.cos(self.angle / 2), math.sin(self.angle / 2)
            return np.array([[c, -s], [s, c]], dtype=complex)
        if self.kind == "RZ":
            e = np.exp(-0.5j * self.angle)
            return np.array([[e, 0], [0, np.conj(e)]], dtype=complex)
        if self.kind == "H":
            return _H
        if self.kind in ("X", "CNOT", "MCX"):
            return _X
        if self.kind in ("Z", "CZ"):
            return _Z
        return np.asarray(self.matrix, dtype=complex)

    def inverse(self) -> "Gate":
        if self.kind in ROTATION_KINDS:
            return Gate(self.kind, self.targets, self.controls, self.polarity, -self.angle)
        if self.kind == "PREP":
            return Gate(
                self.kind, self.targets, self.controls, self.polarity,
                matrix=np.ascontiguousarray(self.matrix.conj().T),
            )
        return self  # H, X, Z, CZ, CNOT, MCX are involutions

    def with_extra_controls(self, controls: Sequence[int], polarity: Sequence[int]) -> "Gate":
        return Gate(
            self.kind,
            self.targets,
            self.controls + tuple(controls),
            self.polarity + tuple(polarity),
            self.angle,
            self.matrix,
        )


def rx(q: int, angle: float) -> Gate:
    return Gate("RX", (q,), angle=angle)


def ry(q: int, angle: float) -> Gate:
    return Gate("RY", (q,), angle=angle)


def rz(q: int, angle: float) -> Gate:
    return Gate("RZ", (q,), angle=angle)


def h(q: int) -> Gate:
    return Gate("H", (q,))


def x(q: int) -> Gate:
    return Gate("X", (q,))


def z(q: int) -> Gate:
    return Gate("Z", (q,))


def cz(control: int, target: int) -> Gate:
    return Gate("CZ", (target,), (control,), (1,))


def cnot(control: int, target: int) -> Gate:
    return Gate("CNOT", (target,), (control,), (1,))


def mcx(controls: Sequence[int], target: int, polarity: Sequence[int] | None = None) -> Gate:
    ctrls = tuple(controls)
    pol = tuple(polarity) if polarity is not None else (1,) * len(ctrls)
    return Gate("MCX", (target,), ctrls, pol)


def prep(qubits: Sequence[int], matrix: np.ndarray) -> Gate:
    mat = np.asarray(matrix, dtype=complex)
    k = len(qubits)
    if mat.shape != (2**k, 2**k):
        raise ValueError(f"PREP matrix shape {mat.shape} does not fit {k} qubits")
    return Gate("PREP", tuple(qubits), matrix=mat)


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list on a fixed-width register with a charged gate cost."""

    gates: tuple[Gate, ...]
    width: int
    abstract_cost: int

    def __post_init__(self) -> None:
        if self.width < 0 or self.width > MAX_QUBITS:
            raise WidthOverflowError(f"register width {self.width} exceeds {MAX_QUBITS} qubits")
        if self.abstract_cost < 0:
            raise ValueError("abstract cost must be nonnegative")
        for g in self.gates:
            if any(q >= self.width for q in g.qubits):
                raise ValueError(f"gate {g.kind} addresses qubit outside width {self.width}")


def circuit(gates: Iterable[Gate], width: int, abstract_cost: int) -> Circuit:
    return Circuit(tuple(gates), width, abstract_cost)


def concat(*circuits: Circuit) -> Circuit:
    """Concatenate circuits of equal width; costs add."""
    widths = {c.width for c in circuits}
    if len(widths) != 1:
        raise ValueError(f"cannot concatenate circuits of differing widths {sorted(widths)}")
    gates: tuple[Gate, ...] = ()
    for c in circuits:
        gates = gates + c.gates
    return Circuit(gates, widths.pop(), sum(c.abstract_cost for c in circuits))


def embed(c: Circuit, width: int, offset: int = 0) -> Circuit:
    """Re-home a circuit into a wider register, shifting qubits by ``offset``."""
    if offset < 0 or (offset == 0 and width == c.width):
        if offset < 0:
            raise ValueError("offset must be nonnegative")
        return c
    gates = tuple(
        Gate(
            g.kind,
            tuple(q + offset for q in g.targets),
            tuple(q + offset for q in g.controls),
            g.polarity,
            g.angle,
            g.matrix,
        )
        for g in c.gates
    )
    return Circuit(gates, width, c.abstract_cost)


def inverse(c: Circuit) -> Circuit:
    """Adjoint circuit; charged cost is unchanged."""
    return Circuit(tuple(g.inverse() for g in reversed(c.gates)), c.width, c.abstract_cost)


def controlled(c: Circuit, controls: Sequence[int], polarity: Sequence[int] | None = None) -> Circuit:
    """Condition a whole circuit on extra control qubits.

    Acts as the original circuit where every control matches its polarity and
    as the identity elsewhere.  The charged cost equals the original cost.
    """
    ctrls = tuple(controls)
    pol = tuple(polarity) if polarity is not None else (1,) * len(ctrls)
    if len(ctrls) != len(pol):
        raise ValueError("one polarity bit required per control")
    used = {q for g in c.gates for q in g.qubits}
    if used & set(ctrls):
        raise ValueError("control qubits overlap the circuit's qubits")
    width = max([c.width] + [q + 1 for q in ctrls])
    gates = tuple(g.with_extra_controls(ctrls, pol) for g in c.gates)
    return Circuit(gates, width, c.abstract_cost)


@dataclass(frozen=True)
class QuantumState:
    """Dense amplitude vector over ``num_qubits`` little-endian qubits."""

    amplitudes: np.ndarray
    num_qubits: int

    def __post_init__(self) -> None:
        if self.amplitudes.shape != (2**self.num_qubits,):
            raise ValueError("amplitude array length must be 2**num_qubits")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape([2] * self.num_qubits)


def zero_state(num_qubits: int) -> QuantumState:
    if num_qubits < 1 or num_qubits > MAX_QUBITS:
        raise WidthOverflowError(f"cannot allocate {num_qubits} qubits (max {MAX_QUBITS})")
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[0] = 1.0
    return QuantumState(amps, num_qubits)


def _axis(qubit: int, num_qubits: int) -> int:
    # reshape([2]*m) is C-ordered: axis 0 holds the most significant bit
    return num_qubits - 1 - qubit


def _apply_matrix(block: np.ndarray, matrix: np.ndarray, target_axes: Sequence[int]) -> np.ndarray:
    """Apply ``matrix`` on the given tensor axes; ``target_axes[0]`` is the LSB."""
    k = len(target_axes)
    order = [target_axes[k - 1 - j] for j in range(k)]
    moved = np.moveaxis(block, order, range(k))
    shape = moved.shape
    out = matrix @ moved.reshape(2**k, -1)
    return np.moveaxis(out.reshape(shape), range(k), order)


def _apply_gate(tensor: np.ndarray, gate: Gate, num_qubits: int) -> np.ndarray:
    matrix = gate.base_matrix()
    if not gate.controls:
        axes = [_axis(q, num_qubits) for q in gate.targets]
        return _apply_matrix(tensor, matrix, axes)
    index: list[object] = [slice(None)] * num_qubits
    fixed_axes = []
    for q, b in zip(gate.controls, gate.polarity):
        ax = _axis(q, num_qubits)
        index[ax] = b
        fixed_axes.append(ax)
    block = tensor[tuple(index)]
    target_axes = []
    for q in gate.targets:
        ax = _axis(q, num_qubits)
        target_axes.append(ax - sum(1 for f in fixed_axes if f < ax))
    tensor[tuple(index)] = _apply_matrix(block, matrix, target_axes)
    return tensor


def apply(c: Circuit, state: QuantumState) -> QuantumState:
    """Run the circuit on the state, returning a fresh normalized state."""
    if c.width != state.num_qubits:
        raise ValueError(f"circuit width {c.width} does not match state of {state.num_qubits} qubits")
    tensor = state.tensor().copy()
    for gate in c.gates:
        tensor = _apply_gate(tensor, gate, state.num_qubits)
    out = QuantumState(np.ascontiguousarray(tensor.reshape(-1)), state.num_qubits)
    drift = abs(out.norm() - 1.0)
    if drift > NORM_TOL * (1 + len(c.gates)):
        raise RuntimeError(f"statevector norm drifted by {drift:.3e}")
    return out


@dataclass(frozen=True)
class ProjectorSpec:
    """Conjunction of per-qubit bit constraints, e.g. ((0, 0), (3, 1))."""

    constraints: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        seen = set()
        for q, b in self.constraints:
            if b not in (0, 1):
                raise ValueError("constraint bits must be 0 or 1")
            if q in seen:
                raise ValueError(f"duplicate constraint on qubit {q}")
            seen.add(q)

    def validate_width(self, num_qubits: int) -> None:
        for q, _ in self.constraints:
            if q < 0 or q >= num_qubits:
                raise ValueError(f"constraint on out-of-range qubit {q}")


def all_zero_projector(qubits: Sequence[int]) -> ProjectorSpec:
    return ProjectorSpec(tuple((q, 0) for q in qubits))


def _constrained_index(proj: ProjectorSpec, num_qubits: int) -> tuple:
    index: list[object] = [slice(None)] * num_qubits
    for q, b in proj.constraints:
        index[_axis(q, num_qubits)] = b
    return tuple(index)


def projector_probability(state: QuantumState, proj: ProjectorSpec) -> float:
    """Summed |amplitude|^2 over basis states matching every constraint."""
    proj.validate_width(state.num_qubits)
    block = state.tensor()[_constrained_index(proj, state.num_qubits)]
    return float(np.sum(np.abs(block) ** 2))


def phase_flip(state: QuantumState, proj: ProjectorSpec) -> QuantumState:
    """Multiply amplitudes in the projector's subspace by -1."""
    proj.validate_width(state.num_qubits)
    tensor = state.tensor().copy()
    tensor[_constrained_index(proj, state.num_qubits)] *= -1.0
    return QuantumState(np.ascontiguousarray(tensor.reshape(-1)), state.num_qubits)


def measure_bits(
    state: QuantumState, qubits: Sequence[int], rng: np.random.Generator
) -> tuple[int, ...]:
    """Sample the marginal distribution of the named qubits once."""
    qs = tuple(qubits)
    for q in qs:
        if q < 0 or q >= state.num_qubits:
            raise ValueError(f"measurement of out-of-range qubit {q}")
    k = len(qs)
    probs_tensor = np.abs(state.tensor()) ** 2
    axes = [_axis(q, state.num_qubits) for q in qs]
    order = [axes[k - 1 - j] for j in range(k)]
    moved = np.moveaxis(probs_tensor, order, range(k))
    marginal = moved.reshape(2**k, -1).sum(axis=1)
    marginal = marginal / marginal.sum()
    outcome = int(rng.choice(2**k, p=marginal))
    return tuple((outcome >> i) & 1 for i in range(k))
