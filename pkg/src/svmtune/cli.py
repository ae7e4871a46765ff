"""Command-line front end: tune / grid / eval subcommands with a JSON report.

stdout carries only the machine-readable report; progress lines go to
stderr. Floats are rendered with 17 significant digits so two runs with the
same seed produce byte-identical reports apart from wall_time_seconds.

Exit codes: 0 success, 1 usage error, 2 data error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .dataset import Dataset, kfold_split, parse_csv, parse_libsvm, standardize
from .errors import ConvergenceError, DataError
from .evaluation import EvalCache, Evaluation, cv_accuracy
from .search_space import ParamRange
from .svm import HyperParams, SolverConfig
from .tuner import IterationRecord, TuneResult, TunerConfig, baseline_grid, ils_tune

__all__ = ["CliArgs", "UsageError", "parse_args", "run", "main", "console_main"]

SCHEMA_VERSION = "1.0"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    """Bad command line; carries the message shown with the usage text."""


@dataclass(frozen=True)
class CliArgs:
    subcommand: str
    data_path: str
    format: str
    label_column: str | None
    k: int
    max_iterations: int
    patience: int
    seed: int
    scale: bool
    c_value: float | None
    gamma_value: float | None
    out_path: str | None
    threads: int


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive value, got {text}")
    return value


def _build_parser() -> _Parser:
    parser = _Parser(prog="svmtune", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", required=True, metavar="PATH", help="dataset file")
    common.add_argument(
        "--format",
        choices=("libsvm", "csv"),
        help="input format; inferred from the extension when omitted",
    )
    common.add_argument("--label-col", metavar="NAME", help="CSV label column")
    common.add_argument("--k", type=int, default=5, help="CV folds (default 5)")
    common.add_argument("--seed", type=int, default=42, help="PRNG seed (default 42)")
    common.add_argument(
        "--scale", action="store_true", help="standardize features before tuning"
    )
    common.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    common.add_argument(
        "--threads",
        type=int,
        metavar="INT",
        help="max concurrent candidate evaluations (default: available parallelism)",
    )

    tune = sub.add_parser("tune", parents=[common], help="iterated local search")
    tune.add_argument(
        "--max-iters", type=int, default=20, help="iterations after the initial grid"
    )
    tune.add_argument(
        "--patience", type=int, default=5, help="consecutive rejections before stopping"
    )

    sub.add_parser("grid", parents=[common], help="plain 5x5 grid search baseline")

    evaluate = sub.add_parser(
        "eval", parents=[common], help="cross-validate a single (C, gamma)"
    )
    evaluate.add_argument("--c", type=_positive_float, help="penalty parameter C")
    evaluate.add_argument("--gamma", type=_positive_float, help="RBF width gamma")
    return parser


def parse_args(argv: list[str]) -> CliArgs:
    """Validate argv into CliArgs; raises UsageError on any bad input."""
    parser = _build_parser()
    ns = parser.parse_args(argv)

    fmt = ns.format
    if fmt is None:
        fmt = "csv" if ns.data.lower().endswith(".csv") else "libsvm"
    if fmt == "csv" and not ns.label_col:
        raise UsageError("--label-col is required for csv input")
    if fmt == "libsvm" and ns.label_col:
        raise UsageError("--label-col only applies to csv input")

    if ns.subcommand == "eval":
        if ns.c is None or ns.gamma is None:
            raise UsageError("eval requires both --c and --gamma")
    if ns.k < 2:
        raise UsageError(f"--k must be >= 2, got {ns.k}")
    if ns.seed < 0 or ns.seed >= 2**64:
        raise UsageError("--seed must be an unsigned 64-bit integer")
    if ns.threads is not None and ns.threads < 1:
        raise UsageError("--threads must be >= 1")

    max_iterations = getattr(ns, "max_iters", 20)
    patience = getattr(ns, "patience", 5)
    if max_iterations < 0:
        raise UsageError("--max-iters must be >= 0")
    if patience < 1:
        raise UsageError("--patience must be >= 1")

    return CliArgs(
        subcommand=ns.subcommand,
        data_path=ns.data,
        format=fmt,
        label_column=ns.label_col,
        k=ns.k,
        max_iterations=max_iterations,
        patience=patience,
        seed=ns.seed,
        scale=ns.scale,
        c_value=getattr(ns, "c", None),
        gamma_value=getattr(ns, "gamma", None),
        out_path=ns.out,
        threads=ns.threads if ns.threads is not None else os.cpu_count() or 1,
    )


def _render_json(obj, indent: int = 0) -> str:
    """Minimal JSON renderer with '%.17g' floats and insertion-order keys."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        body = ",\n".join(
            f"{pad}  {json.dumps(key)}: {_render_json(value, indent + 1)}"
            for key, value in obj.items()
        )
        return "{\n" + body + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        body = ",\n".join(f"{pad}  {_render_json(item, indent + 1)}" for item in obj)
        return "[\n" + body + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, float):
        return format(obj, ".17g")
    if isinstance(obj, int):
        return str(obj)
    if obj is None:
        return "null"
    return json.dumps(obj)


def _evaluation_dict(evaluation: Evaluation) -> dict:
    return {
        "c": float(evaluation.params.c),
        "gamma": float(evaluation.params.gamma),
        "cv_accuracy": float(evaluation.cv_accuracy),
        "fold_accuracies": [float(a) for a in evaluation.fold_accuracies],
    }


def _range_list(r: ParamRange) -> list[float]:
    return [float(v) for v in r.as_tuple()]


def _iteration_dict(record: IterationRecord) -> dict:
    return {
        "index": record.index,
        "range_gamma_used": _range_list(record.range_gamma_used),
        "range_c_used": _range_list(record.range_c_used),
        "best_candidate": _evaluation_dict(record.best_candidate),
        "accepted": record.accepted,
        "new_evaluations": record.new_evaluations,
    }


def _config_dict(args: CliArgs) -> dict:
    solver = SolverConfig()
    return {
        "subcommand": args.subcommand,
        "data_path": args.data_path,
        "format": args.format,
        "label_column": args.label_column,
        "k": args.k,
        "max_iterations": args.max_iterations,
        "patience": args.patience,
        "seed": args.seed,
        "scale": args.scale,
        "threads": args.threads,
        "solver": {
            "kkt_tolerance": solver.kkt_tolerance,
            "max_passes": solver.max_passes,
            "max_iterations": solver.max_iterations,
        },
    }


def _build_report(
    args: CliArgs,
    initial: Evaluation | None,
    iterations: tuple[IterationRecord, ...],
    best: Evaluation,
    baseline: Evaluation | None,
    total_evaluations: int,
    wall_time_seconds: float,
) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "config": _config_dict(args),
        "initial": _evaluation_dict(initial) if initial is not None else None,
        "iterations": [_iteration_dict(r) for r in iterations],
        "best": _evaluation_dict(best),
        "baseline": _evaluation_dict(baseline) if baseline is not None else None,
        "total_evaluations": total_evaluations,
        "wall_time_seconds": wall_time_seconds,
    }


def _load_dataset(args: CliArgs) -> Dataset:
    try:
        raw = Path(args.data_path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {args.data_path}: {exc}") from exc
    if args.format == "csv":
        return parse_csv(raw, args.label_column)
    return parse_libsvm(raw)


def _progress_printer(record: IterationRecord) -> None:
    verdict = "accepted" if record.accepted else "rejected"
    winner = record.best_candidate
    print(
        f"iter {record.index:3d}: c={winner.params.c:.6g} "
        f"gamma={winner.params.gamma:.6g} acc={winner.cv_accuracy:.6f} {verdict}",
        file=sys.stderr,
    )


def _tuner_config(args: CliArgs) -> TunerConfig:
    return TunerConfig(
        k=args.k,
        max_iterations=args.max_iterations,
        patience=args.patience,
        seed=args.seed,
        scale_features=args.scale,
    )


def run(args: CliArgs) -> int:
    """Execute a parsed command and emit the report; returns the exit code."""
    dataset = _load_dataset(args)
    started = time.perf_counter()

    if args.subcommand == "tune":
        result: TuneResult = ils_tune(
            dataset, _tuner_config(args), threads=args.threads,
            progress=_progress_printer,
        )
        print(
            f"best: c={result.best.params.c:.6g} gamma={result.best.params.gamma:.6g} "
            f"acc={result.best.cv_accuracy:.6f} "
            f"({result.total_evaluations} evaluations)",
            file=sys.stderr,
        )
        report = _build_report(
            args,
            initial=result.initial,
            iterations=result.iterations,
            best=result.best,
            baseline=result.initial,
            total_evaluations=result.total_evaluations,
            wall_time_seconds=result.wall_time_seconds,
        )
    elif args.subcommand == "grid":
        cache = EvalCache()
        winner = baseline_grid(
            dataset, _tuner_config(args), threads=args.threads, cache=cache
        )
        report = _build_report(
            args,
            initial=None,
            iterations=(),
            best=winner,
            baseline=winner,
            total_evaluations=cache.misses,
            wall_time_seconds=time.perf_counter() - started,
        )
    else:
        if args.scale:
            dataset, _ = standardize(dataset)
        folds = kfold_split(dataset, args.k, args.seed)
        evaluation = cv_accuracy(
            dataset, folds, HyperParams(c=args.c_value, gamma=args.gamma_value)
        )
        report = _build_report(
            args,
            initial=None,
            iterations=(),
            best=evaluation,
            baseline=None,
            total_evaluations=1,
            wall_time_seconds=time.perf_counter() - started,
        )

    text = _render_json(report) + "\n"
    if args.out_path:
        Path(args.out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    """Entry point returning an exit code instead of raising SystemExit."""
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        return run(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConvergenceError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def console_main() -> None:
    raise SystemExit(main())
