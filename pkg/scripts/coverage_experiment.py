#!/usr/bin/env python3
"""Coverage and cost comparison of all strategies on the committed fixture.

For each strategy, runs many seeded trials at one precision target and
reports the empirical coverage (fraction of runs within the target), the
mean query count, and the mean modeled gate count, side by side with the
closed-form predictions used by the recommender.

Usage: python3 scripts/coverage_experiment.py [--epsilon F] [--trials K]
"""

import argparse

import numpy as np

from qkinfer.coefkit import decompose
from qkinfer.costmodel import (
    GateCostModel,
    StrategyId,
    gates_per_query,
    queries_theoretical,
)
from qkinfer.dataset import default_dataset, default_query_point
from qkinfer.strategies import InferenceInstance, infer


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--epsilon", type=float, default=0.05)
    parser.add_argument("--trials", type=int, default=500)
    parser.add_argument("--seed", type=int, default=990_000)
    args = parser.parse_args()

    dataset = default_dataset()
    instance = InferenceInstance(
        dataset.feature_map, dataset.alpha, dataset.training, default_query_point(dataset)
    )
    decomp = decompose(dataset.alpha)
    model = GateCostModel(
        feature_gates=dataset.feature_map.gate_count,
        num_terms=len(dataset.training),
        data_qubits=dataset.feature_map.num_qubits,
    )
    print(f"fixture '{dataset.name}': exact value {instance.exact:+.6f}, "
          f"eps={args.epsilon}, {args.trials} trials\n")
    header = f"{'strategy':30s} {'coverage':>8s} {'mean queries':>13s} {'mean gates':>12s} {'~queries':>10s}"
    print(header)
    for strategy in StrategyId:
        errors, queries, gates = [], [], []
        for trial in range(args.trials):
            report = infer(strategy, instance, args.epsilon, seed=args.seed + trial)
            errors.append(report.abs_error)
            queries.append(report.counter.total_queries)
            gates.append(report.modeled_gates)
        coverage = float(np.mean(np.array(errors) <= args.epsilon))
        formula = queries_theoretical(strategy, decomp, args.epsilon)
        print(
            f"{strategy.value:30s} {coverage:8.3f} {np.mean(queries):13.0f} "
            f"{np.mean(gates):12.0f} {formula:10.0f}"
        )
    print(f"\nper-query gate prices: " + ", ".join(
        f"{s.value}={gates_per_query(s, model)}" for s in StrategyId
    ))


if __name__ == "__main__":
    main()
