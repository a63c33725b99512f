"""Data-dependent feature-map circuits and the brute-force kernel oracle.

Three concrete circuit families are shipped so experiments are reproducible;
``angle_ry_cz`` is the default.  For the non-identity families the data
dimension equals the qubit count and each layer consumes the features in
order, cycling modulo the dimension (so with d = n every layer re-reads the
same features, distinguished by optional per-layer offsets).

The charged gate count G is a fixed function of (family, n, L):

* ``identity``        -> 0
* ``angle_ry_cz``     -> L * 2n   (n rotations + n ring-CZ per layer)
* ``angle_rzrx_ring`` -> L * 3n   (n RX + n RZ + n ring-CZ per layer)

For n = 1 the CZ ring is empty but the formula still charges the ring slots,
so the simulated gate list is shorter than the charged count at n = 1 only.
For n = 2 the ring wraps around and contains the pair twice; the duplicate CZ
is the identity but is charged (and simulated) as two gates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .coefkit import CoefficientVector
from .statevec import Circuit, Gate, apply, circuit, cz, rx, ry, rz, zero_state

FAMILIES = ("angle_ry_cz", "angle_rzrx_ring", "identity")

DataPoint = tuple[float, ...]


def as_point(values: Sequence[float]) -> DataPoint:
    pt = tuple(float(v) for v in values)
    if not all(np.isfinite(pt)):
        raise ValueError("data point entries must be finite")
    return pt


@dataclass(frozen=True)
class FeatureMapSpec:
    num_qubits: int
    num_layers: int = 1
    family: str = "angle_ry_cz"
    layer_offsets: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown feature-map family {self.family!r}")
        if self.num_qubits < 1:
            raise ValueError("need at least one qubit")
        if self.num_layers < 0:
            raise ValueError("layer count must be nonnegative")
        if self.layer_offsets is not None and len(self.layer_offsets) != self.num_layers:
            raise ValueError("need one offset per layer")

    @property
    def gate_count(self) -> int:
        """Charged gate count G for one application of the circuit."""
        if self.family == "identity":
            return 0
        per_layer = {"angle_ry_cz": 2, "angle_rzrx_ring": 3}[self.family]
        return self.num_layers * per_layer * self.num_qubits

    @property
    def data_dim(self) -> int:
        return self.num_qubits

    def offset(self, layer: int) -> float:
        if self.layer_offsets is None:
            return 0.0
        return self.layer_offsets[layer]


def _ring_pairs(n: int) -> list[tuple[int, int]]:
    if n < 2:
        return []
    return [(q, (q + 1) % n) for q in range(n)]


def build_feature_circuit(spec: FeatureMapSpec, point: Sequence[float]) -> Circuit:
    """Circuit preparing the feature state from |0...0>; deterministic in (spec, x)."""
    pt = as_point(point)
    n = spec.num_qubits
    if spec.family != "identity" and len(pt) != spec.data_dim:
        raise ValueError(
            f"data point has dimension {len(pt)}, feature map expects {spec.data_dim}"
        )
    gates: list[Gate] = []
    for layer in range(spec.num_layers):
        off = spec.offset(layer)
        if spec.family == "identity":
            continue
        angles = [pt[(layer * n + q) % len(pt)] + off for q in range(n)]
        if spec.family == "angle_ry_cz":
            gates.extend(ry(q, angles[q]) for q in range(n))
        else:  # angle_rzrx_ring
            gates.extend(rx(q, angles[q]) for q in range(n))
            gates.extend(rz(q, angles[q]) for q in range(n))
        gates.extend(cz(a, b) for a, b in _ring_pairs(n))
    return circuit(gates, n, spec.gate_count)


def feature_state(spec: FeatureMapSpec, point: Sequence[float]):
    return apply(build_feature_circuit(spec, point), zero_state(spec.num_qubits))


def kernel_exact(spec: FeatureMapSpec, x: Sequence[float], x2: Sequence[float]) -> float:
    """|<psi(x2)|psi(x)>|^2 from exact statevectors; symmetric, in [0, 1]."""
    psi = feature_state(spec, x).amplitudes
    phi = feature_state(spec, x2).amplitudes
    return float(abs(np.vdot(phi, psi)) ** 2)


@dataclass(frozen=True)
class TrainingSet:
    """Training points with labels (+-1 for classification, real for regression)."""

    points: tuple[DataPoint, ...]
    labels: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.points) < 1:
            raise ValueError("training set must be nonempty")
        if len(self.labels) != len(self.points):
            raise ValueError("need one label per training point")
        dims = {len(p) for p in self.points}
        if len(dims) != 1:
            raise ValueError("training points must share one dimension")

    @classmethod
    def from_points(
        cls, points: Sequence[Sequence[float]], labels: Sequence[float] | None = None
    ) -> "TrainingSet":
        pts = tuple(as_point(p) for p in points)
        lbl = tuple(float(v) for v in labels) if labels is not None else (1.0,) * len(pts)
        return cls(pts, lbl)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return len(self.points[0])


def kernel_row_exact(
    spec: FeatureMapSpec, training: TrainingSet, x: Sequence[float]
) -> np.ndarray:
    """Exact kernel values k(x, x_i) against every training point."""
    psi = feature_state(spec, x).amplitudes
    row = np.empty(len(training))
    for i, pt in enumerate(training.points):
        phi = feature_state(spec, pt).amplitudes
        row[i] = abs(np.vdot(phi, psi)) ** 2
    return row


def f_exact(
    spec: FeatureMapSpec,
    alpha: CoefficientVector,
    training: TrainingSet,
    x: Sequence[float],
) -> float:
    """Ground-truth weighted kernel sum; the reference oracle for every test."""
    if len(training) != len(alpha):
        raise ValueError(
            f"{len(alpha)} coefficients for {len(training)} training points"
        )
    row = kernel_row_exact(spec, training, x)
    return float(np.dot(alpha.as_array(), row))
