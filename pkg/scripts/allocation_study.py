#!/usr/bin/env python3
"""Shot-allocation study: closed-form budgets vs exhaustive integer search.

Draws random 3-term weight vectors, solves the variance-constrained budget
problem with the closed-form allocation for both estimator rates, and
compares the totals against an exhaustive integer minimizer.

Usage: python3 scripts/allocation_study.py [--vectors K] [--seed S]
"""

import argparse

import numpy as np

from qkinfer.coefkit import CoefficientVector, decompose
from qkinfer.harness import bruteforce_allocation
from qkinfer.strategies import allocate_budget


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--vectors", type=int, default=10)
    parser.add_argument("--seed", type=int, default=11009)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'weights':28s} {'r':>2s} {'eps':>6s} {'closed-form':>12s} {'brute-force':>12s} {'ratio':>7s}")
    for _ in range(args.vectors):
        weights = rng.uniform(0.2, 1.0, size=3) * rng.choice([-1.0, 1.0], size=3)
        weights /= np.abs(weights).sum()
        alpha = CoefficientVector.from_iterable(weights.tolist())
        decomp = decompose(alpha)
        label = ",".join(f"{w:+.3f}" for w in weights)
        for r, eps in ((1, 0.12), (2, 0.03)):
            ours = allocate_budget(decomp, eps, 1 / 3, r)
            best = bruteforce_allocation(decomp, eps, 1 / 3, r, m_max=4 * max(ours.per_index))
            print(
                f"{label:28s} {r:2d} {eps:6.3f} {ours.total:12d} {best.total:12d} "
                f"{ours.total / best.total:7.4f}"
            )


if __name__ == "__main__":
    main()
