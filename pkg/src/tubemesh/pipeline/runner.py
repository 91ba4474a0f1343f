"""
Stage runner for a whole pipeline run.

Stages run in a fixed order. A stage whose artifacts already exist is
skipped unless forced, so an interrupted run resumes where it stopped.
Any failure inside a stage surfaces as a ``StageError`` naming it.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from tubemesh.errors import StageError
from tubemesh.metrics import Report, read_report
from tubemesh.phantom import generate_corpus, generate_patients
from tubemesh.phantom.corpus import MANIFEST_NAME
from tubemesh.pipeline.config import PipelineConfig
from tubemesh.pipeline.stages import (
    derive_seeds,
    grade_corpora,
    infer_corpus,
    report_run,
    train_grading,
    train_segmentation,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Stage:
    name: str
    run: Callable[[PipelineConfig, int], None]
    done: Callable[[PipelineConfig], bool]


def _checkpoints(directory: Path, pattern: str) -> int:
    return len(list(directory.glob(pattern))) if directory.exists() else 0


def _phantoms(config: PipelineConfig, threads: int) -> None:
    paths, phantom = config.paths, config.phantom
    seeds = derive_seeds(config.seed, 0, 4)
    generate_corpus(paths.arteries_train, phantom.train_arteries, seeds[0], phantom, threads=threads)
    generate_corpus(paths.arteries_test, phantom.test_arteries, seeds[1], phantom, threads=threads)
    generate_patients(paths.patients_train, phantom.train_patients, seeds[2], phantom, threads=threads)
    generate_patients(paths.patients_test, phantom.test_patients, seeds[3], phantom, threads=threads)


def _phantoms_done(config: PipelineConfig) -> bool:
    paths = config.paths
    return all(
        (d / MANIFEST_NAME).exists()
        for d in (paths.arteries_train, paths.arteries_test, paths.patients_train, paths.patients_test)
    )


def _fancnn_train(config: PipelineConfig, threads: int) -> None:
    section = config.fancnn
    seeds = derive_seeds(config.seed, 1, section.train.ensemble)
    train_segmentation(
        config.paths.arteries_train, config.paths.fancnn_models, section.model, section.train, seeds, threads=threads
    )


def _fancnn_train_done(config: PipelineConfig) -> bool:
    return _checkpoints(config.paths.fancnn_models, "fancnn_*.tmnn") >= config.fancnn.train.ensemble


def _fancnn_infer(config: PipelineConfig, threads: int) -> None:
    infer_corpus(config.paths.fancnn_models, config.paths.arteries_test, config.paths.inference)


def _fancnn_infer_done(config: PipelineConfig) -> bool:
    return (config.paths.inference / MANIFEST_NAME).exists()


def _cadrads_train(config: PipelineConfig, threads: int) -> None:
    section = config.cadrads
    seeds = derive_seeds(config.seed, 2, section.train.ensemble)
    train_grading(
        config.paths.patients_train, config.paths.cadrads_models, section.model, section.train, seeds, threads=threads
    )


def _cadrads_train_done(config: PipelineConfig) -> bool:
    return _checkpoints(config.paths.cadrads_models, "cadrads_*.tmnn") >= config.cadrads.train.ensemble


def _cadrads_grade(config: PipelineConfig, threads: int) -> None:
    paths = config.paths
    segmented = (paths.inference / MANIFEST_NAME).exists()
    grade_corpora(
        paths.cadrads_models,
        paths.grades,
        patients_dir=paths.patients_test,
        arteries_dir=paths.arteries_test if segmented else None,
        inference_dir=paths.inference if segmented else None,
    )


def _cadrads_grade_done(config: PipelineConfig) -> bool:
    return (config.paths.grades / "patients.csv").exists()


def _metrics(config: PipelineConfig, threads: int) -> None:
    paths = config.paths
    segmented = (paths.inference / MANIFEST_NAME).exists()
    report_run(
        paths.report,
        truth_dir=paths.arteries_test if segmented else None,
        inference_dir=paths.inference if segmented else None,
        grades_dir=paths.grades if paths.grades.exists() else None,
        config=config.metrics,
        acceptance=config.acceptance,
        seed=config.seed,
    )


STAGES = (
    Stage("phantom", _phantoms, _phantoms_done),
    Stage("fancnn train", _fancnn_train, _fancnn_train_done),
    Stage("fancnn infer", _fancnn_infer, _fancnn_infer_done),
    Stage("cadrads train", _cadrads_train, _cadrads_train_done),
    Stage("cadrads grade", _cadrads_grade, _cadrads_grade_done),
    # always rebuilt from the artifacts
    Stage("metrics", _metrics, lambda config: False),
)
STAGE_NAMES = tuple(stage.name for stage in STAGES)


def parse_stages(text: str | None) -> list[str]:
    """
    Stage names from a comma-separated list, in pipeline order; None means
    all stages.

    Example:
        >>> parse_stages("metrics, phantom")
        ['phantom', 'metrics']
    """
    if text is None:
        return list(STAGE_NAMES)
    requested = {part.strip() for part in text.split(",") if part.strip()}
    unknown = sorted(requested - set(STAGE_NAMES))
    if unknown:
        raise ValueError(f"unknown stages {unknown}, expected names from {list(STAGE_NAMES)}")
    return [name for name in STAGE_NAMES if name in requested]


def run_pipeline(
    config: PipelineConfig,
    stages: Sequence[str] | None = None,
    *,
    threads: int = 1,
    force: bool = False,
) -> Report | None:
    """
    Run the selected stages in pipeline order.

    Returns
    -------
    Report | None
        The report when the metrics stage ran, else None.

    Raises
    ------
    StageError
        If a stage fails; the message names the stage.
    """
    selected = set(STAGE_NAMES if stages is None else stages)
    config.paths.root.mkdir(parents=True, exist_ok=True)
    (config.paths.root / "config.json").write_text(config.model_dump_json(indent=2))
    for stage in STAGES:
        if stage.name not in selected:
            continue
        if not force and stage.done(config):
            log.info(f"Stage '{stage.name}': artifacts found, skipping")
            continue
        log.info(f"Stage '{stage.name}': started")
        try:
            stage.run(config, threads)
        except StageError:
            raise
        except Exception as exc:
            raise StageError(stage.name, str(exc)) from exc
        log.info(f"Stage '{stage.name}': finished")
    if "metrics" in selected:
        return read_report(config.paths.report)
    return None
