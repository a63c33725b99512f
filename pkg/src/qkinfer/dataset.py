"""Instance files: a self-describing JSON format plus fixture generators.

A dataset file carries everything needed to reproduce an instance: the
feature-map spec, the training points with labels, and the trained weights.
Floats serialize via ``repr`` so files round-trip losslessly and diff
cleanly.  ``format_version`` guards future layout changes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .coefkit import CoefficientVector
from .featuremap import FeatureMapSpec, TrainingSet

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Dataset:
    name: str
    feature_map: FeatureMapSpec
    training: TrainingSet
    alpha: CoefficientVector

    def __post_init__(self) -> None:
        if len(self.training) != len(self.alpha):
            raise ValueError("one coefficient per training point required")
        if self.feature_map.family != "identity" and self.training.dim != self.feature_map.data_dim:
            raise ValueError(
                f"training dimension {self.training.dim} does not match "
                f"feature map dimension {self.feature_map.data_dim}"
            )


def to_dict(dataset: Dataset) -> dict:
    fm = dataset.feature_map
    return {
        "format_version": FORMAT_VERSION,
        "name": dataset.name,
        "feature_map": {
            "family": fm.family,
            "num_qubits": fm.num_qubits,
            "num_layers": fm.num_layers,
            "layer_offsets": list(fm.layer_offsets) if fm.layer_offsets is not None else None,
        },
        "training": {
            "points": [list(p) for p in dataset.training.points],
            "labels": list(dataset.training.labels),
        },
        "alpha": list(dataset.alpha.entries),
    }


def from_dict(payload: dict) -> Dataset:
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported dataset format_version {version!r}")
    fm = payload["feature_map"]
    offsets = fm.get("layer_offsets")
    feature_map = FeatureMapSpec(
        num_qubits=int(fm["num_qubits"]),
        num_layers=int(fm["num_layers"]),
        family=str(fm["family"]),
        layer_offsets=tuple(float(v) for v in offsets) if offsets is not None else None,
    )
    training = TrainingSet.from_points(
        payload["training"]["points"], payload["training"]["labels"]
    )
    alpha = CoefficientVector.from_iterable(payload["alpha"])
    return Dataset(str(payload.get("name", "")), feature_map, training, alpha)


def save(dataset: Dataset, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(to_dict(dataset), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load(path: str | Path) -> Dataset:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read dataset file {path}: {exc}") from exc
    return from_dict(payload)


def random_dataset(
    rng: np.random.Generator,
    num_qubits: int,
    num_points: int,
    num_layers: int = 1,
    family: str = "angle_ry_cz",
    l1_target: float | None = None,
    zero_fraction: float = 0.0,
    name: str = "random",
) -> Dataset:
    """Random instance with standard-normal weights and uniform angle features."""
    spec = FeatureMapSpec(num_qubits=num_qubits, num_layers=num_layers, family=family)
    points = rng.uniform(0.0, 2.0 * np.pi, size=(num_points, num_qubits))
    labels = rng.choice([-1.0, 1.0], size=num_points)
    while True:
        weights = rng.normal(size=num_points)
        if zero_fraction > 0.0:
            weights[rng.random(num_points) < zero_fraction] = 0.0
        if np.any(weights != 0.0):
            break
    if l1_target is not None:
        weights = weights * (l1_target / np.abs(weights).sum())
    return Dataset(
        name=name,
        feature_map=spec,
        training=TrainingSet.from_points(points.tolist(), labels.tolist()),
        alpha=CoefficientVector.from_iterable(weights.tolist()),
    )


def default_dataset() -> Dataset:
    """The committed desk-scale instance: n=3, N=8, two layers of the default
    family, heavy-tailed weights.

    Weight magnitudes are lognormal(mu=0, sigma=1.2) with Rademacher signs,
    rescaled to a 1-norm of exactly 2; the spread makes adaptive allocation
    visibly cheaper than a fixed budget.  Everything is drawn from one fixed
    seed so the instance regenerates bit-identically.
    """
    rng = np.random.default_rng(np.random.SeedSequence(1873541))
    num_qubits, num_points = 3, 8
    spec = FeatureMapSpec(num_qubits=num_qubits, num_layers=2, family="angle_ry_cz")
    points = rng.uniform(0.0, 2.0 * np.pi, size=(num_points, num_qubits))
    labels = rng.choice([-1.0, 1.0], size=num_points)
    magnitudes = rng.lognormal(mean=0.0, sigma=1.2, size=num_points)
    signs = rng.choice([-1.0, 1.0], size=num_points)
    weights = signs * magnitudes
    weights = weights * (2.0 / np.abs(weights).sum())
    return Dataset(
        name="default-desk-scale",
        feature_map=spec,
        training=TrainingSet.from_points(points.tolist(), labels.tolist()),
        alpha=CoefficientVector.from_iterable(weights.tolist()),
    )


def default_query_point(dataset: Dataset, seed: int = 99) -> tuple[float, ...]:
    """Deterministic evaluation point matched to the dataset's dimension."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return tuple(rng.uniform(0.0, 2.0 * np.pi, size=dataset.training.dim).tolist())


def doubled_dataset(dataset: Dataset) -> Dataset:
    """Duplicate every training point and halve its weight.

    Doubles the term count while keeping the weights' 1-norm and the exact
    inference value unchanged, which isolates term-count effects in resource
    measurements.
    """
    points = []
    labels = []
    weights = []
    for pt, lbl, a in zip(
        dataset.training.points, dataset.training.labels, dataset.alpha.entries
    ):
        points.extend([pt, pt])
        labels.extend([lbl, lbl])
        weights.extend([a / 2.0, a / 2.0])
    return Dataset(
        name=dataset.name + "-doubled",
        feature_map=dataset.feature_map,
        training=TrainingSet.from_points(points, labels),
        alpha=CoefficientVector.from_iterable(weights),
    )
