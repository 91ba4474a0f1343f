"""
Command line entry point: ``tubemesh <group> <command> [options]``.

Global options (``--seed``, ``--threads``, ``--config``, ``--log-level``)
go before the group. Only this module configures logging.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from tubemesh.cadrads import grade_patient, load_graders
from tubemesh.errors import TubemeshError
from tubemesh.io import read_patient_signals
from tubemesh.phantom import generate_corpus, generate_patients, parse_grade_mix
from tubemesh.pipeline.config import PipelineConfig, resolve_threads
from tubemesh.pipeline.runner import STAGE_NAMES, parse_stages, run_pipeline
from tubemesh.pipeline.stages import (
    cross_validate_grading,
    derive_seeds,
    infer_corpus,
    report_run,
    train_grading,
    train_segmentation,
)

log = logging.getLogger(__name__)


def _add_fold_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--folds", type=int, default=None, help="train on one fold of a k-fold split")
    parser.add_argument("--fold", type=int, default=0, help="which fold to hold out (with --folds)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tubemesh", description="Coronary plaque meshes and CAD-RADS grading.")
    parser.add_argument("--seed", type=int, default=None, help="run seed (overrides the config)")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (default: $TUBEMESH_THREADS or 1)")
    parser.add_argument("--config", type=Path, default=None, help="JSON pipeline config")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    groups = parser.add_subparsers(dest="group", required=True)

    phantom = groups.add_parser("phantom", help="synthetic phantom corpora").add_subparsers(dest="command", required=True)
    gen = phantom.add_parser("gen", help="write a phantom corpus")
    gen.add_argument("--out", type=Path, required=True)
    gen.add_argument("--count", type=int, required=True)
    gen.add_argument("--patients", action="store_true", help="write a grading corpus of patients")
    gen.add_argument("--grade-mix", default=None, help='grade weights, e.g. "0:1,3:2"')

    fancnn = groups.add_parser("fancnn", help="plaque segmentation network").add_subparsers(dest="command", required=True)
    train = fancnn.add_parser("train", help="train a FanCNN ensemble")
    train.add_argument("--corpus", type=Path, required=True)
    train.add_argument("--out", type=Path, required=True)
    train.add_argument("--seeds", type=int, default=None, help="ensemble size (default: from config)")
    _add_fold_arguments(train)
    infer = fancnn.add_parser("infer", help="segment every artery of a corpus")
    infer.add_argument("--model", type=Path, required=True)
    infer.add_argument("--corpus", type=Path, required=True)
    infer.add_argument("--out", type=Path, required=True)

    cadrads = groups.add_parser("cadrads", help="CAD-RADS grader").add_subparsers(dest="command", required=True)
    train = cadrads.add_parser("train", help="train a grader ensemble")
    train.add_argument("--corpus", type=Path, required=True)
    train.add_argument("--out", type=Path, required=True)
    train.add_argument("--seeds", type=int, default=None, help="ensemble size (default: from config)")
    _add_fold_arguments(train)
    cv = cadrads.add_parser("cv", help="k-fold cross-validation of the grader")
    cv.add_argument("--corpus", type=Path, required=True)
    cv.add_argument("--out", type=Path, required=True)
    cv.add_argument("--folds", type=int, default=5)
    cv.add_argument("--seeds", type=int, default=None, help="ensemble size (default: from config)")
    grade = cadrads.add_parser("grade", help="grade one patient signal CSV")
    grade.add_argument("--model", type=Path, required=True)
    grade.add_argument("--signals", type=Path, required=True)

    metrics = groups.add_parser("metrics", help="evaluation").add_subparsers(dest="command", required=True)
    report = metrics.add_parser("report", help="score segmentations and grades")
    report.add_argument("--pred", type=Path, required=True, help="inference directory")
    report.add_argument("--truth", type=Path, required=True, help="corpus the inference ran on")
    report.add_argument("--grades", type=Path, default=None, help="directory with patients.csv / arteries.csv")
    report.add_argument("--out", type=Path, required=True)

    pipeline = groups.add_parser("pipeline", help="end-to-end run").add_subparsers(dest="command", required=True)
    run = pipeline.add_parser("run", help="run pipeline stages")
    run.add_argument("--stages", default=None, help=f"comma-separated subset of {list(STAGE_NAMES)}")
    run.add_argument("--force", action="store_true", help="recompute stages whose artifacts exist")

    config = groups.add_parser("config", help="configuration").add_subparsers(dest="command", required=True)
    config.add_parser("show-defaults", help="print the default config as JSON")
    return parser


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig.load(args.config)
    if args.seed is not None:
        config = config.model_copy(update={"seed": args.seed})
    return config


def _phantom_gen(args, config: PipelineConfig, threads: int) -> int:
    phantom = config.phantom
    if args.grade_mix is not None:
        phantom = phantom.model_copy(update={"grade_mix": parse_grade_mix(args.grade_mix)})
    write = generate_patients if args.patients else generate_corpus
    write(args.out, args.count, config.seed, phantom, threads=threads)
    return 0


def _fancnn(args, config: PipelineConfig, threads: int) -> int:
    section = config.fancnn
    if args.command == "train":
        count = args.seeds or section.train.ensemble
        train_segmentation(
            args.corpus,
            args.out,
            section.model,
            section.train,
            derive_seeds(config.seed, 1, count),
            threads=threads,
            folds=args.folds,
            fold=args.fold,
            split_seed=config.seed,
        )
    else:
        infer_corpus(args.model, args.corpus, args.out)
    return 0


def _cadrads(args, config: PipelineConfig, threads: int) -> int:
    section = config.cadrads
    if args.command == "train":
        count = args.seeds or section.train.ensemble
        train_grading(
            args.corpus,
            args.out,
            section.model,
            section.train,
            derive_seeds(config.seed, 2, count),
            threads=threads,
            folds=args.folds,
            fold=args.fold,
            split_seed=config.seed,
        )
    elif args.command == "cv":
        count = args.seeds or section.train.ensemble
        report = cross_validate_grading(
            args.corpus,
            args.out,
            section.model,
            section.train,
            derive_seeds(config.seed, 2, count),
            folds=args.folds,
            split_seed=config.seed,
            metrics=config.metrics,
            threads=threads,
        )
        print(report.model_dump_json(indent=2))
    else:
        result = grade_patient(load_graders(args.model), read_patient_signals(args.signals))
        print(json.dumps(result.to_dict(), indent=2))
    return 0


def _metrics(args, config: PipelineConfig, threads: int) -> int:
    report = report_run(
        args.out,
        truth_dir=args.truth,
        inference_dir=args.pred,
        grades_dir=args.grades,
        config=config.metrics,
        acceptance=config.acceptance,
        seed=config.seed,
    )
    return 0 if report.passed else 1


def _pipeline(args, config: PipelineConfig, threads: int) -> int:
    report = run_pipeline(config, parse_stages(args.stages), threads=threads, force=args.force)
    if report is None:
        return 0
    return 0 if report.passed else 1


def _config(args, config: PipelineConfig | None, threads: int) -> int:
    print(PipelineConfig().model_dump_json(indent=2))
    return 0


COMMANDS = {
    "phantom": _phantom_gen,
    "fancnn": _fancnn,
    "cadrads": _cadrads,
    "metrics": _metrics,
    "pipeline": _pipeline,
    "config": _config,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        threads = resolve_threads(args.threads)
        # show-defaults must work even when --config points at a broken file
        config = None if args.group == "config" else _load_config(args)
        return COMMANDS[args.group](args, config, threads)
    except (TubemeshError, ValueError, FileNotFoundError) as exc:
        log.error(str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
