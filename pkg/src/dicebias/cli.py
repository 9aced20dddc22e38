"""Command-line front end writing reproducible CSV / JSON-lines artifacts."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from collections.abc import Sequence
from enum import Enum
from importlib import metadata
from pathlib import Path
from typing import Any

from .exceptions import DiceBiasDomainError, DiceBiasError, DiceBiasNumericalError
from .models import (
    FeatureMode,
    RunManifest,
    SweepEstimator,
    ToyDatasetSpec,
    TrainConfig,
    TrainLoss,
    TrainOptimizer,
)
from .output import (
    atomic_write,
    bias_csv,
    dataset_csv,
    format_float,
    json_lines,
    landscape_csv,
    trace_csv,
    write_manifest,
)
from .sweep import (
    DEFAULT_MUS,
    DEFAULT_N_SUBS,
    DEFAULT_P_HAT_POINTS,
    DEFAULT_P_POINTS,
    DEFAULT_P_TRUE_SET,
    DEFAULT_THRESHOLD_TOL,
    bias_curve,
    landscape,
    summarize_threshold,
    uniform_grid,
)
from .toytrain import cross_validate, generate, train

VERSION: str = metadata.version(__package__)  # ty:ignore[invalid-argument-type]

OUTPUT_DIR_ENV = "DICEBIAS_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "dicebias-out"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

_LOGGER = logging.getLogger(__name__)


def _estimators(choice: str) -> list[SweepEstimator]:
    if choice == "both":
        return [SweepEstimator.EXACT, SweepEstimator.PLUG_IN]
    return [SweepEstimator(choice)]


def _probabilities(text: str) -> tuple[float, ...]:
    """Parse a comma separated list of probabilities."""
    try:
        values = tuple(float(part) for part in text.split(","))
    except ValueError as err:
        msg = f"expected comma separated numbers, got {text!r}"
        raise argparse.ArgumentTypeError(msg) from err
    if not all(0.0 <= v <= 1.0 for v in values):
        msg = f"probabilities must lie in [0, 1], got {text!r}"
        raise argparse.ArgumentTypeError(msg)
    return values


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError as err:
        msg = f"expected a number, got {text!r}"
        raise argparse.ArgumentTypeError(msg) from err
    if not value > 0:
        msg = f"expected a positive number, got {text!r}"
        raise argparse.ArgumentTypeError(msg)
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as err:
        msg = f"expected an integer, got {text!r}"
        raise argparse.ArgumentTypeError(msg) from err
    if value < 1:
        msg = f"expected a positive integer, got {text!r}"
        raise argparse.ArgumentTypeError(msg)
    return value


def _output_dir(args: argparse.Namespace) -> Path:
    if args.out is not None:
        return args.out
    return Path(os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR))


def cmd_landscape(args: argparse.Namespace) -> list[Path]:
    """Write one landscape CSV per (estimator, mu, n_sub)."""
    out = _output_dir(args)
    p_hat_grid = uniform_grid(args.p_hat_points)
    paths = []
    for estimator in _estimators(args.estimator):
        for n_sub in args.n_sub or DEFAULT_N_SUBS:
            for mu in args.mu or DEFAULT_MUS:
                points = landscape(mu, n_sub, DEFAULT_P_TRUE_SET, p_hat_grid, estimator)
                name = f"landscape_{estimator}_mu{format_float(mu)}_n{n_sub}.csv"
                paths.append(atomic_write(out / name, landscape_csv(points)))
    return paths


def cmd_sweep(args: argparse.Namespace) -> list[Path]:
    """Write the bias curves and the threshold summaries."""
    out = _output_dir(args)
    p_true_grid = uniform_grid(args.p_points)
    estimators = _estimators(args.estimator)
    rows = []
    summaries = []
    for n_sub in args.n_sub or DEFAULT_N_SUBS:
        for mu in args.mu or DEFAULT_MUS:
            rows.extend(
                bias_curve(mu, n_sub, p_true_grid, SweepEstimator.CROSS_ENTROPY)
            )
            for estimator in estimators:
                rows.extend(bias_curve(mu, n_sub, p_true_grid, estimator))
                summaries.append(
                    summarize_threshold(mu, n_sub, estimator, args.threshold_tol)
                )
    summaries.sort(key=lambda s: (s.estimator, s.n_sub, s.mu))
    return [
        atomic_write(out / "bias_curves.csv", bias_csv(rows)),
        atomic_write(out / "thresholds.jsonl", json_lines(summaries)),
    ]


def _dataset_spec(args: argparse.Namespace) -> ToyDatasetSpec:
    if args.region_probs is None:
        return ToyDatasetSpec.canonical(
            1.0 if args.mu is None else args.mu,
            args.p_beta,
            n_images=args.images,
            pixel_scale=args.pixel_scale,
            feature_mode=args.feature_mode,
            separation=args.separation,
            seed=args.seed,
        )
    if args.mu is None:
        return ToyDatasetSpec(
            n_images=args.images,
            region_probs=args.region_probs,
            pixels_per_region=args.pixels_per_region,
            feature_mode=args.feature_mode,
            separation=args.separation,
            seed=args.seed,
        )
    canonical = ToyDatasetSpec.canonical(
        args.mu, 0.0, n_images=args.images, pixel_scale=args.pixel_scale
    )
    return ToyDatasetSpec(
        n_images=args.images,
        region_probs=args.region_probs,
        region_pixels=canonical.region_pixels,
        feature_mode=args.feature_mode,
        separation=args.separation,
        seed=args.seed,
    )


def _train_config(args: argparse.Namespace) -> TrainConfig:
    overrides = {
        name: getattr(args, name)
        for name in (
            "learning_rate",
            "max_epochs",
            "patience_lr",
            "patience_stop",
            "validation_fraction",
            "bootstrap_resamples",
        )
        if getattr(args, name) is not None
    }
    return TrainConfig(
        loss=args.loss, optimizer=args.optimizer, seed=args.seed, **overrides
    )


def cmd_train_toy(args: argparse.Namespace) -> list[Path]:
    """Generate a toy dataset, train on it and write the reports and traces."""
    if (
        args.mu is not None
        and args.region_probs is not None
        and len(args.region_probs) != 3
    ):
        msg = "--mu lays out three regions; give exactly three --region-probs."
        raise DiceBiasDomainError(msg)
    out = _output_dir(args)
    spec = _dataset_spec(args)
    config = _train_config(args)
    dataset = generate(spec)

    if args.folds is None:
        results = [train(dataset, None, config)]
        trace_names = ["trace.csv"]
    else:
        results = cross_validate(dataset, config, args.folds)
        trace_names = [f"trace_fold{k}.csv" for k in range(len(results))]

    paths = [
        atomic_write(out / "report.jsonl", json_lines(r.report for r in results)),
        *(
            atomic_write(out / name, trace_csv(r.trace))
            for name, r in zip(trace_names, results, strict=True)
        ),
        atomic_write(out / "model.jsonl", json_lines(r.model for r in results)),
    ]
    if args.write_dataset:
        paths.append(atomic_write(out / "dataset.csv", dataset_csv(dataset)))
    return paths


def cmd_replay(args: argparse.Namespace) -> int:
    """Re-run the command recorded in a manifest and return its exit code."""
    manifest = RunManifest.from_json(args.manifest.read_text(encoding="utf-8"))
    argv = list(manifest.parameters["argv"])
    if args.out is not None:
        argv += ["--out", str(args.out)]
    if manifest.tool_version != VERSION:
        _LOGGER.warning(
            "Manifest written by version %s, replaying with %s",
            manifest.tool_version,
            VERSION,
        )
    _LOGGER.info("Replaying: %s", " ".join(argv))
    return main(argv)


def _add_grid_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--mu",
        type=_positive_float,
        action="append",
        help=f"uncertain volume ratio, repeatable (default: {DEFAULT_MUS})",
    )
    parser.add_argument(
        "--n-sub",
        type=_positive_int,
        action="append",
        help=f"number of β sub-regions, repeatable (default: {DEFAULT_N_SUBS})",
    )
    parser.add_argument(
        "--estimator",
        choices=["exact", "plugin", "both"],
        default="both",
        help="soft Dice risk estimator (default: both)",
    )


def _add_out_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--out",
        type=Path,
        help=f"output directory (default: ${OUTPUT_DIR_ENV} or ./{DEFAULT_OUTPUT_DIR})",
    )


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser of the dicebias command."""
    parser = argparse.ArgumentParser(
        prog="dicebias",
        description="Volumetric bias of soft Dice versus cross-entropy optima.",
    )
    parser.add_argument("--version", action="version", version=VERSION)
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="more logging"
    )
    parser.add_argument(
        "-q", "--quiet", action="store_true", help="log errors only"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    landscape_parser = commands.add_parser(
        "landscape", help="soft Dice risk over the predicted β probability"
    )
    _add_grid_flags(landscape_parser)
    landscape_parser.add_argument(
        "--p-hat-points",
        type=int,
        default=DEFAULT_P_HAT_POINTS,
        help=f"grid size of the prediction axis (default: {DEFAULT_P_HAT_POINTS})",
    )
    _add_out_flag(landscape_parser)
    landscape_parser.set_defaults(handler=cmd_landscape)

    sweep_parser = commands.add_parser(
        "sweep", help="volumetric bias curves and thresholds"
    )
    _add_grid_flags(sweep_parser)
    sweep_parser.add_argument(
        "--p-points",
        type=int,
        default=DEFAULT_P_POINTS,
        help=f"grid size of the p_β axis (default: {DEFAULT_P_POINTS})",
    )
    sweep_parser.add_argument(
        "--threshold-tol",
        type=_positive_float,
        default=DEFAULT_THRESHOLD_TOL,
        help=f"bisection tolerance (default: {DEFAULT_THRESHOLD_TOL})",
    )
    _add_out_flag(sweep_parser)
    sweep_parser.set_defaults(handler=cmd_sweep)

    train_parser = commands.add_parser(
        "train-toy", help="train a per-pixel logistic model on synthetic images"
    )
    train_parser.add_argument(
        "--loss", type=TrainLoss, choices=list(TrainLoss), default=TrainLoss.CE
    )
    train_parser.add_argument(
        "--region-probs",
        type=_probabilities,
        help="comma separated region probabilities, e.g. 0,0.3,1",
    )
    train_parser.add_argument(
        "--mu",
        type=_positive_float,
        help="lay out background / uncertain / foreground pixels as 100 / mu / 1",
    )
    train_parser.add_argument(
        "--p-beta",
        type=float,
        default=0.75,
        help="β probability when --region-probs is omitted (default: 0.75)",
    )
    train_parser.add_argument("--images", type=_positive_int, default=2000)
    train_parser.add_argument("--seed", type=int, default=0)
    train_parser.add_argument("--folds", type=int)
    train_parser.add_argument("--pixel-scale", type=_positive_int, default=1)
    train_parser.add_argument("--pixels-per-region", type=_positive_int, default=1)
    train_parser.add_argument(
        "--feature-mode",
        type=FeatureMode,
        choices=list(FeatureMode),
        default=FeatureMode.REGION_ONEHOT,
    )
    train_parser.add_argument("--separation", type=_positive_float, default=2.0)
    train_parser.add_argument(
        "--optimizer",
        type=TrainOptimizer,
        choices=list(TrainOptimizer),
        default=TrainOptimizer.GD,
    )
    train_parser.add_argument("--learning-rate", type=_positive_float)
    train_parser.add_argument("--max-epochs", type=_positive_int)
    train_parser.add_argument("--patience-lr", type=_positive_int)
    train_parser.add_argument("--patience-stop", type=_positive_int)
    train_parser.add_argument("--validation-fraction", type=float)
    train_parser.add_argument("--bootstrap-resamples", type=_positive_int)
    train_parser.add_argument(
        "--write-dataset", action="store_true", help="also write dataset.csv"
    )
    _add_out_flag(train_parser)
    train_parser.set_defaults(handler=cmd_train_toy)

    replay_parser = commands.add_parser("replay", help="re-run a recorded manifest")
    replay_parser.add_argument("manifest", type=Path)
    replay_parser.add_argument("--out", type=Path)
    return parser


def _jsonable(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _manifest(args: argparse.Namespace, argv: Sequence[str]) -> RunManifest:
    parameters = {
        name: _jsonable(value)
        for name, value in sorted(vars(args).items())
        if name not in {"handler", "verbose", "quiet"}
    }
    parameters["argv"] = list(argv)
    return RunManifest(
        command=args.command,
        parameters=parameters,
        seed=getattr(args, "seed", 0),
        tool_version=VERSION,
    )


def _configure_logging(args: argparse.Namespace) -> None:
    if args.quiet:
        level = logging.ERROR
    else:
        level = max(logging.DEBUG, logging.WARNING - 10 * args.verbose)
    logging.basicConfig(
        level=level, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )


def main(argv: Sequence[str] | None = None) -> int:
    """Run the dicebias command and return its exit code.

    Exit codes: 0 on success, 2 for usage and domain errors, 3 when a
    computation stops being finite.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    if args.command == "replay":
        try:
            return cmd_replay(args)
        except (OSError, ValueError, LookupError) as err:
            _LOGGER.error("Cannot replay %s: %s", args.manifest, err)  # noqa: TRY400
            return EXIT_USAGE

    try:
        paths = args.handler(args)
    except DiceBiasNumericalError as err:
        _LOGGER.error("Numerical failure: %s", err)  # noqa: TRY400
        return EXIT_NUMERICAL
    except DiceBiasError as err:
        _LOGGER.error("%s", err)  # noqa: TRY400
        return EXIT_USAGE

    manifest = _manifest(args, argv)
    manifest.output_paths = [str(p) for p in paths]
    write_manifest(_output_dir(args) / f"{args.command}_manifest.json", manifest)
    for path in manifest.output_paths:
        _LOGGER.info("Wrote %s", path)
    return EXIT_OK
