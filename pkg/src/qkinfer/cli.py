"""Command-line driver.

Subcommands: ``infer`` (one estimate with full accounting), ``benchmark``
(seeded sweep to CSV/plot files), ``recommend`` (strategy ranking by the
closed-form costs), ``validate`` (the built-in check suite), and
``make-fixture`` (write instance files).

Exit codes: 0 success, 1 runtime failure (including register overflow),
2 usage or input-validation error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .calibration import CALIBRATION_VERSION
from .coefkit import CoefficientVector, decompose
from .costmodel import (
    GateCostModel,
    StrategyId,
    ranking,
    strategy_from_name,
)
from .dataset import (
    Dataset,
    default_dataset,
    load,
    random_dataset,
    save,
)
from .estimate import BACKENDS
from .harness import ExperimentPlan, emit, run_plan
from .statevec import WidthOverflowError
from .strategies import InferenceInstance, infer
from .validate import run_checks

STRATEGY_NAMES = [s.value for s in StrategyId]


class UsageError(Exception):
    """Input problems that should exit with status 2."""


def _parse_floats(text: str, what: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip() != "")
    except ValueError as exc:
        raise UsageError(f"cannot parse {what} {text!r}: {exc}") from exc
    if not values:
        raise UsageError(f"{what} must contain at least one value")
    return values


def _load_dataset(path: str) -> Dataset:
    try:
        return load(path)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


def _parse_strategies(text: str) -> tuple[StrategyId, ...]:
    if text == "all":
        return tuple(StrategyId)
    try:
        return tuple(strategy_from_name(name.strip()) for name in text.split(","))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


_STRATEGY_EPILOG = "strategies:\n" + "\n".join(f"  {name}" for name in STRATEGY_NAMES)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkinfer",
        description="Simulate and benchmark quantum-kernel inference strategies "
        f"(calibration v{CALIBRATION_VERSION}).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_infer = sub.add_parser(
        "infer", help="run one inference strategy on a dataset",
        epilog=_STRATEGY_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p_infer.add_argument("--dataset", required=True, help="instance file (JSON)")
    p_infer.add_argument("--x", required=True, help="query point, comma-separated reals")
    p_infer.add_argument("--strategy", required=True, help="strategy name (list below)")
    p_infer.add_argument("--epsilon", type=float, required=True, help="target additive precision")
    p_infer.add_argument("--delta", type=float, default=1.0 / 3.0, help="failure probability (default 1/3)")
    p_infer.add_argument("--seed", type=int, default=0, help="RNG seed")
    p_infer.add_argument("--backend", choices=BACKENDS, default="analytic2d")

    p_bench = sub.add_parser(
        "benchmark", help="seeded sweep over strategies and precisions",
        epilog=_STRATEGY_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p_bench.add_argument("--dataset", required=True)
    p_bench.add_argument("--x", required=True, help="query point, comma-separated reals")
    p_bench.add_argument(
        "--strategy", default="all",
        help="'all' or comma-separated strategy names (list below)",
    )
    p_bench.add_argument("--epsilon", required=True, help="comma-separated precision grid")
    p_bench.add_argument("--delta", type=float, default=1.0 / 3.0)
    p_bench.add_argument("--trials", type=int, default=10)
    p_bench.add_argument("--seed", type=int, default=0, help="base seed for the trial streams")
    p_bench.add_argument("--out", required=True, help="output directory")
    p_bench.add_argument("--backend", choices=BACKENDS, default="analytic2d")

    p_rec = sub.add_parser("recommend", help="rank strategies by closed-form cost")
    p_rec.add_argument("--dataset", help="instance file; alternative to raw parameters")
    p_rec.add_argument("--alpha", help="raw coefficients, comma-separated")
    p_rec.add_argument("--feature-gates", type=int, help="gates per feature-map query")
    p_rec.add_argument("--data-qubits", type=int, help="feature-map qubit count")
    p_rec.add_argument("--epsilon", type=float, required=True)
    p_rec.add_argument("--criterion", choices=("queries", "gates"), default="queries")

    p_val = sub.add_parser("validate", help="run the built-in check suite")
    p_val.add_argument("--level", default="fast", help="fast or full")

    p_fix = sub.add_parser("make-fixture", help="write an instance file")
    p_fix.add_argument("--out", required=True, help="destination path")
    p_fix.add_argument("--seed", type=int, default=None,
                       help="draw a random instance; omit for the committed default")
    p_fix.add_argument("--data-qubits", type=int, default=3)
    p_fix.add_argument("--num-points", type=int, default=8)
    p_fix.add_argument("--layers", type=int, default=2)
    p_fix.add_argument("--family", default="angle_ry_cz")
    p_fix.add_argument("--l1", type=float, default=2.0, help="rescale weights to this 1-norm")
    return parser


def _cmd_infer(args) -> int:
    dataset = _load_dataset(args.dataset)
    x = _parse_floats(args.x, "query point")
    strategy = _parse_strategies(args.strategy)
    if len(strategy) != 1:
        raise UsageError("infer runs exactly one strategy")
    try:
        instance = InferenceInstance(dataset.feature_map, dataset.alpha, dataset.training, x)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report = infer(
        strategy[0], instance, args.epsilon, delta=args.delta,
        seed=args.seed, backend=args.backend,
    )
    counts = " ".join(f"{k}={v}" for k, v in sorted(report.counter.counts.items()))
    print(f"strategy       {report.strategy.value}")
    print(f"estimate       {report.estimate:.17g}")
    print(f"exact          {report.exact:.17g}")
    print(f"abs_error      {report.abs_error:.17g}")
    print(f"epsilon        {report.epsilon_target:.17g}")
    print(f"delta          {report.delta:.17g}")
    print(f"total_queries  {report.counter.total_queries}")
    print(f"oracle_counts  {counts}")
    print(f"modeled_gates  {report.modeled_gates}")
    if report.allocation is not None:
        print(f"allocation     {','.join(str(m) for m in report.allocation.per_index)}")
    print(f"seed           {report.seed}")
    return 0


def _cmd_benchmark(args) -> int:
    dataset = _load_dataset(args.dataset)
    x = _parse_floats(args.x, "query point")
    try:
        plan = ExperimentPlan(
            dataset=dataset,
            x=x,
            strategies=_parse_strategies(args.strategy),
            epsilon_grid=_parse_floats(args.epsilon, "precision grid"),
            trials=args.trials,
            base_seed=args.seed,
            backend=args.backend,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = run_plan(plan)
    paths = emit(result, args.out)
    for path in paths:
        print(path)
    for strategy, fits in result.slopes.items():
        for label, (slope, stderr) in fits.items():
            print(f"# {strategy.value} {label}: {slope:.3f} +- {stderr:.3f}")
    return 0


def _cmd_recommend(args) -> int:
    if args.dataset is not None:
        dataset = _load_dataset(args.dataset)
        decomp = decompose(dataset.alpha)
        model = GateCostModel(
            feature_gates=dataset.feature_map.gate_count,
            num_terms=len(dataset.training),
            data_qubits=dataset.feature_map.num_qubits,
        )
    elif args.alpha is not None:
        if args.feature_gates is None or args.data_qubits is None:
            raise UsageError("raw mode needs --alpha, --feature-gates and --data-qubits")
        try:
            alpha = CoefficientVector.from_iterable(_parse_floats(args.alpha, "alpha"))
            decomp = decompose(alpha)
            model = GateCostModel(
                feature_gates=args.feature_gates,
                num_terms=len(alpha),
                data_qubits=args.data_qubits,
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    else:
        raise UsageError("provide either --dataset or raw --alpha parameters")
    for criterion, marker in (("queries", "*"), ("gates", "o")):
        try:
            ranked = ranking(model, decomp, args.epsilon, criterion)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        print(f"ranking by {criterion}:")
        for pos, (strategy, total) in enumerate(ranked):
            tag = f" ({marker})" if pos == 0 and criterion == args.criterion else ""
            print(f"  {pos + 1}. {strategy.value:28s} {total:.17g}{tag}")
    return 0


def _cmd_validate(args) -> int:
    try:
        results = run_checks(args.level)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    width = max(len(r.name) for r in results)
    failures = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        failures += not r.passed
        print(f"{status}  {r.name:<{width}}  [{r.seconds:7.2f}s]  {r.detail}")
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return 0 if failures == 0 else 1


def _cmd_make_fixture(args) -> int:
    if args.seed is None:
        dataset = default_dataset()
    else:
        rng = np.random.default_rng(args.seed)
        try:
            dataset = random_dataset(
                rng,
                num_qubits=args.data_qubits,
                num_points=args.num_points,
                num_layers=args.layers,
                family=args.family,
                l1_target=args.l1,
                name=f"random-seed-{args.seed}",
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    path = save(dataset, args.out)
    print(path)
    return 0


_COMMANDS = {
    "infer": _cmd_infer,
    "benchmark": _cmd_benchmark,
    "recommend": _cmd_recommend,
    "validate": _cmd_validate,
    "make-fixture": _cmd_make_fixture,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except WidthOverflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
