#!/usr/bin/env python3
"""Scaling-law sweep on the committed fixture.

Runs every strategy over a geometric precision grid, writes the CSV and plot
data, and prints the fitted query-vs-precision slopes next to their expected
exponents (2 for the sampling routes, 1 for the amplitude-estimation routes).

Usage: python3 scripts/scaling_sweep.py [--out OUT_DIR] [--trials K] [--seed S]
"""

import argparse
from pathlib import Path

from qkinfer.costmodel import QAE_STRATEGIES, StrategyId
from qkinfer.dataset import default_dataset, default_query_point
from qkinfer.harness import ExperimentPlan, emit, run_plan


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/scaling_sweep")
    parser.add_argument("--trials", type=int, default=40)
    parser.add_argument("--seed", type=int, default=20_2508)
    args = parser.parse_args()

    dataset = default_dataset()
    plan = ExperimentPlan(
        dataset=dataset,
        x=default_query_point(dataset),
        strategies=tuple(StrategyId),
        epsilon_grid=(0.1, 0.05, 0.025, 0.0125),
        trials=args.trials,
        base_seed=args.seed,
    )
    result = run_plan(plan)
    for path in emit(result, Path(args.out)):
        print("wrote", path)

    print(f"\n{'strategy':30s} {'queries slope':>14s} {'expected':>9s}")
    for strategy in StrategyId:
        slope, stderr = result.slopes[strategy]["queries_vs_inv_eps"]
        expected = 1.0 if strategy in QAE_STRATEGIES else 2.0
        print(f"{strategy.value:30s} {slope:8.3f} +- {stderr:.3f} {expected:9.1f}")


if __name__ == "__main__":
    main()
