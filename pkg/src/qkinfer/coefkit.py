"""Coefficient-vector algebra.

A trained kernel model carries a real weight per training point.  Everything
downstream works with the split of that weight vector into a positive scale
(its 1-norm), a probability vector over indices, and a sign per index.  This
module owns that split, the p-norms used by the budget formulas, and the
exact positive/negative decomposition of the weighted kernel sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Tolerances for double-precision arithmetic, used by constructors and tests.
RECONSTRUCTION_TOL = 1e-12
SPLIT_IDENTITY_TOL = 1e-10
KERNEL_RANGE_TOL = 1e-9

_SUPPORTED_PNORMS = (2.0 / 3.0, 1.0, 2.0)


@dataclass(frozen=True)
class CoefficientVector:
    """Trained weights, one real entry per training point."""

    entries: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.entries) < 1:
            raise ValueError("coefficient vector must have at least one entry")
        if not all(math.isfinite(a) for a in self.entries):
            raise ValueError("coefficient entries must be finite")
        if all(a == 0.0 for a in self.entries):
            raise ValueError("zero coefficient vector")

    @classmethod
    def from_iterable(cls, values: Iterable[float]) -> "CoefficientVector":
        return cls(tuple(float(v) for v in values))

    def __len__(self) -> int:
        return len(self.entries)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=float)

    @property
    def support(self) -> tuple[int, ...]:
        """Indices with nonzero weight, ascending."""
        return tuple(i for i, a in enumerate(self.entries) if a != 0.0)


@dataclass(frozen=True)
class CoefDecomposition:
    """Split of a coefficient vector into (1-norm, probabilities, signs).

    Zero entries get probability 0 and sign +1 by convention; they are
    excluded from ``support`` so per-index loops can skip them.
    """

    l1_norm: float
    probs: tuple[float, ...]
    signs: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.l1_norm <= 0.0:
            raise ValueError("l1 norm must be positive")
        if len(self.probs) != len(self.signs):
            raise ValueError("probs and signs must have equal length")
        if any(s not in (-1, 1) for s in self.signs):
            raise ValueError("signs must be +1 or -1")
        if any(p < 0.0 or p > 1.0 for p in self.probs):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(sum(self.probs) - 1.0) > RECONSTRUCTION_TOL:
            raise ValueError("probabilities must sum to 1")

    def __len__(self) -> int:
        return len(self.probs)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.probs) if p > 0.0)

    def entry(self, i: int) -> float:
        """Reconstructed weight ``l1 * p_i * s_i``."""
        return self.l1_norm * self.probs[i] * self.signs[i]


def decompose(alpha: CoefficientVector) -> CoefDecomposition:
    """Split ``alpha`` into its 1-norm, probability vector and sign vector."""
    arr = alpha.as_array()
    l1 = float(np.abs(arr).sum())
    probs = tuple(float(abs(a) / l1) for a in arr)
    signs = tuple(1 if a >= 0.0 else -1 for a in arr)
    return CoefDecomposition(l1_norm=l1, probs=probs, signs=signs)


def pnorm(alpha: CoefficientVector, p: float) -> float:
    """``(sum |a_i|^p)^(1/p)`` for p in {2/3, 1, 2}.

    The p = 2/3 case is not a norm (no triangle inequality) but obeys the
    same homogeneity and the chain ``|a|_1 <= |a|_{2/3} <= sqrt(N) |a|_1``.
    """
    if not any(p == q for q in _SUPPORTED_PNORMS):
        raise ValueError(f"unsupported p-norm exponent {p!r}; use 2/3, 1 or 2")
    arr = np.abs(alpha.as_array())
    return float(np.sum(arr**p) ** (1.0 / p))


def f_plus_minus_exact(
    decomp: CoefDecomposition, kernels: Sequence[float]
) -> tuple[float, float]:
    """Exact positive/negative parts of the normalized inference sum.

    Given kernel values ``k_i`` in [0, 1], returns
    ``f_pm = sum over {i : s_i = +-1} of p_i * k_i``.  The weighted sum then
    satisfies ``l1 * (f_plus - f_minus) = sum a_i k_i``.
    """
    if len(kernels) != len(decomp):
        raise ValueError(
            f"kernel list length {len(kernels)} does not match {len(decomp)} coefficients"
        )
    f_plus = 0.0
    f_minus = 0.0
    for p, s, k in zip(decomp.probs, decomp.signs, kernels):
        if k < -KERNEL_RANGE_TOL or k > 1.0 + KERNEL_RANGE_TOL:
            raise ValueError(f"kernel value {k} outside [0, 1]")
        k = min(max(k, 0.0), 1.0)
        if s > 0:
            f_plus += p * k
        else:
            f_minus += p * k
    return f_plus, f_minus
