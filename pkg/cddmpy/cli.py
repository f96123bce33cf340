from __future__ import annotations

import argparse
import logging
from collections.abc import Sequence

from cddmpy.bench.base import Experiment, lookup_experiment
from cddmpy.bench.config import ExperimentConfig, apply_overrides, load_config
from cddmpy.bench.experiments import (
    CheckDistExperiment,
    SampleExperiment,
    SweepMseExperiment,
    SweepPsnrExperiment,
    TrainCddmExperiment,
    TrainJsccExperiment,
)
from cddmpy.bench.pipeline import PipelineExperiment
from cddmpy.errors import CddmError

logger = logging.getLogger("cddmpy")

EXIT_OK: int = 0
EXIT_FAILED_CHECK: int = 1
EXIT_ERROR: int = 2

COMMANDS: tuple[tuple[type[Experiment], str], ...] = (
    (CheckDistExperiment, "moment checks of the receiver and forward process"),
    (TrainCddmExperiment, "train the channel denoiser"),
    (TrainJsccExperiment, "three-stage joint codec and denoiser training"),
    (SampleExperiment, "denoise one batch and write samples.npz"),
    (SweepMseExperiment, "MSE versus SNR with and without the denoiser"),
    (SweepPsnrExperiment, "PSNR versus SNR for the joint system"),
    (PipelineExperiment, "train, sweep and write a manifest"),
)


def add_global_flags(parser: argparse.ArgumentParser, top_level: bool) -> None:
    """Global flags are accepted before and after the subcommand."""

    def default(value: object) -> object:
        return value if top_level else argparse.SUPPRESS

    parser.add_argument(
        "--config", default=default(None), help="JSON experiment config"
    )
    parser.add_argument(
        "--seed", type=int, default=default(None), help="root seed (u64)"
    )
    parser.add_argument("--out", default=default(None), help="output directory")
    parser.add_argument(
        "--dry-run",
        action="store_true",
        default=default(False),
        help="print planned stages, write nothing",
    )
    parser.add_argument(
        "--log-level",
        default=default("INFO"),
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cddmpy", description="Channel denoising diffusion experiments"
    )
    add_global_flags(parser, top_level=True)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for experiment_cls, description in COMMANDS:
        sub = subparsers.add_parser(experiment_cls.command, help=description)
        add_global_flags(sub, top_level=False)
        if experiment_cls is CheckDistExperiment:
            sub.add_argument(
                "--noise-scale",
                type=float,
                default=1.0,
                help="stretch received noise (failure-path check)",
            )
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg: ExperimentConfig = load_config(args.config)
    return apply_overrides(cfg, seed=args.seed, out=args.out)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        cfg: ExperimentConfig = resolve_config(args)
        experiment_cls: type[Experiment] = lookup_experiment(args.command)
        options: dict[str, float] = {}
        if experiment_cls is CheckDistExperiment:
            options["noise_scale"] = args.noise_scale
        experiment: Experiment = experiment_cls(config=cfg, **options)
        if args.dry_run:
            print(f"{args.command} (config {experiment.config_hash}, seed {cfg.seed})")
            for line in experiment.plan():
                print(f"  - {line}")
            return EXIT_OK
        status: int = experiment.run()
    except CddmError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_ERROR

    return EXIT_FAILED_CHECK if status else EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
