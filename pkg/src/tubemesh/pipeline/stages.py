"""
Directory-level steps of the pipeline.

Each step reads its inputs from disk and writes its artifacts next to a
JSON manifest, so the command line and the stage runner share them.
"""

import json
import logging
from pathlib import Path
from typing import Sequence

import numpy as np
import polars as pl

from tubemesh.cadrads import (
    GraderConfig,
    GraderTrainConfig,
    grade_patient,
    grade_signals,
    load_graders,
    load_grading_corpus,
    save_graders,
    train_graders,
)
from tubemesh.fancnn import (
    FanCnnConfig,
    FanCnnTrainConfig,
    PatchCorpus,
    infer_field,
    load_ensemble,
    save_ensemble,
    train_ensemble,
)
from tubemesh.geometry import build_mesh_stack, cross_section_areas
from tubemesh.io import read_areas_csv, read_field_csv, write_areas_csv, write_field_csv, write_obj
from tubemesh.metrics import (
    AcceptanceConfig,
    GradingReport,
    MetricsConfig,
    Report,
    SegmentationCase,
    build_report,
    evaluate_grading,
    evaluate_segmentation,
    fold_split,
    kfold_indices,
    write_report,
)
from tubemesh.phantom import load_corpus, read_manifest

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
GRADE_COLUMNS = ["id", "reference", "predicted"]


def derive_seeds(seed: int, salt: int, count: int) -> list[int]:
    """``count`` seeds for one consumer of the run seed, stable across runs."""
    return [int(s) for s in np.random.SeedSequence([seed, salt]).generate_state(count)]


def select_fold(
    ids: Sequence[str], out_dir: Path, *, folds: int | None, fold: int, split_seed: int
) -> np.ndarray:
    """
    Indices of the items to train on. With ``folds`` set only the training
    part of fold ``fold`` is kept and the split is written to
    ``out_dir/split.json`` so the held-out items can be evaluated later.
    """
    if folds is None:
        return np.arange(len(ids))
    train, test = fold_split(len(ids), folds, fold, split_seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    split = {
        "folds": folds,
        "fold": fold,
        "seed": split_seed,
        "train": [ids[i] for i in train],
        "test": [ids[i] for i in test],
    }
    (out_dir / "split.json").write_text(json.dumps(split, indent=2))
    log.info(f"Fold {fold + 1}/{folds}: training on {len(train)} items, holding out {len(test)}")
    return train


def train_segmentation(
    corpus_dir: Path,
    out_dir: Path,
    model: FanCnnConfig,
    train: FanCnnTrainConfig,
    seeds: Sequence[int],
    *,
    threads: int = 1,
    folds: int | None = None,
    fold: int = 0,
    split_seed: int = 0,
) -> list[Path]:
    arteries = load_corpus(corpus_dir)
    keep = select_fold([a[0] for a in arteries], out_dir, folds=folds, fold=fold, split_seed=split_seed)
    corpus = PatchCorpus([(arteries[i][1], arteries[i][2].field) for i in keep])
    models = train_ensemble(corpus, model, train, seeds, threads=threads)
    return save_ensemble(models, out_dir, seeds, train.epochs)


def infer_corpus(model_dir: Path, corpus_dir: Path, out_dir: Path) -> pl.DataFrame:
    """
    Segment every artery of a corpus.

    Per artery the field with and without classifier attention, the three
    surface meshes and the area signals are written to ``out_dir``.
    """
    models = load_ensemble(model_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for artery_id, mpr, _ in load_corpus(corpus_dir):
        field = infer_field(models, mpr)
        raw = infer_field(models, mpr, attention=False)
        write_field_csv(field, out_dir / f"{artery_id}.field.csv")
        write_field_csv(raw, out_dir / f"{artery_id}.raw.field.csv")
        for surface, mesh in build_mesh_stack(field).items():
            write_obj(mesh, out_dir / f"{artery_id}.{surface}.obj")
        write_areas_csv(cross_section_areas(field), out_dir / f"{artery_id}.areas.csv")
        rows.append({"id": artery_id, "dz": field.dz})
        log.info(f"Segmented {artery_id}")
    manifest = pl.DataFrame(rows, schema={"id": pl.Utf8, "dz": pl.Float64})
    manifest.write_json(out_dir / MANIFEST_NAME)
    return manifest


def train_grading(
    corpus_dir: Path,
    out_dir: Path,
    model: GraderConfig,
    train: GraderTrainConfig,
    seeds: Sequence[int],
    *,
    threads: int = 1,
    folds: int | None = None,
    fold: int = 0,
    split_seed: int = 0,
) -> list[Path]:
    patients = load_grading_corpus(corpus_dir, model)
    keep = select_fold([p.id for p in patients], out_dir, folds=folds, fold=fold, split_seed=split_seed)
    models = train_graders([patients[i] for i in keep], model, train, seeds, threads=threads)
    return save_graders(models, out_dir, seeds, train.epochs)


def cross_validate_grading(
    corpus_dir: Path,
    out_dir: Path,
    model: GraderConfig,
    train: GraderTrainConfig,
    seeds: Sequence[int],
    *,
    folds: int,
    split_seed: int = 0,
    metrics: MetricsConfig | None = None,
    threads: int = 1,
) -> GradingReport:
    """
    k-fold cross-validation of the grader over one grading corpus.

    Every patient is graded once by the ensemble trained without its fold.
    Writes ``cv_grades.csv`` (fold, id, reference, predicted) and
    ``cv_report.json`` to ``out_dir``.
    """
    patients = [p for p in load_grading_corpus(corpus_dir, model) if p.signals]
    rows = []
    for fold, (train_idx, test_idx) in enumerate(kfold_indices(len(patients), folds, split_seed)):
        log.info(f"Cross-validation fold {fold + 1}/{folds}")
        models = train_graders([patients[i] for i in train_idx], model, train, seeds, threads=threads)
        for i in test_idx:
            p = patients[i]
            rows.append((fold, p.id, p.grade, grade_signals(models, p.signals).patient_grade))
    table = pl.DataFrame(rows, schema=["fold", *GRADE_COLUMNS], orient="row").sort("id")
    report = evaluate_grading(
        table.get_column("reference").to_list(), table.get_column("predicted").to_list(), metrics, seed=split_seed
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    table.write_csv(out_dir / "cv_grades.csv")
    (out_dir / "cv_report.json").write_text(report.model_dump_json(indent=2))
    log.info(f"Cross-validated kappa {report.kappa:.3f} over {report.patients} patients")
    return report


def grade_corpora(
    model_dir: Path,
    out_dir: Path,
    *,
    patients_dir: Path | None = None,
    arteries_dir: Path | None = None,
    inference_dir: Path | None = None,
) -> dict[str, pl.DataFrame]:
    """
    Grade the patients of a grading corpus and, when segmentations exist,
    each segmented artery from its inferred area signals.
    """
    models = load_graders(model_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables = {}
    if patients_dir is not None:
        rows = [
            (p.id, p.grade, grade_signals(models, p.signals).patient_grade)
            for p in load_grading_corpus(patients_dir, models[0].config)
            if p.signals
        ]
        tables["patients"] = pl.DataFrame(rows, schema=GRADE_COLUMNS, orient="row")
    if arteries_dir is not None and inference_dir is not None:
        truth = read_manifest(arteries_dir)
        rows = []
        for row in truth.iter_rows(named=True):
            areas = read_areas_csv(inference_dir / f"{row['id']}.areas.csv")
            rows.append((row["id"], row["grade"], grade_patient(models, {row["id"]: areas}).patient_grade))
        tables["arteries"] = pl.DataFrame(rows, schema=GRADE_COLUMNS, orient="row")
    for name, table in tables.items():
        table.write_csv(out_dir / f"{name}.csv")
        log.info(f"Graded {table.height} {name}")
    return tables


def segmentation_cases(truth_dir: Path, inference_dir: Path) -> list[SegmentationCase]:
    cases = []
    for artery_id, _, truth in load_corpus(truth_dir):
        dz = truth.field.dz
        cases.append(
            SegmentationCase(
                id=artery_id,
                truth=truth.field,
                predicted=read_field_csv(inference_dir / f"{artery_id}.field.csv", dz=dz),
                raw=read_field_csv(inference_dir / f"{artery_id}.raw.field.csv", dz=dz),
            )
        )
    return cases


def _read_grades(path: Path):
    if not path.exists():
        return None
    table = pl.read_csv(path)
    if table.height == 0:
        return None
    return table.get_column("reference").to_list(), table.get_column("predicted").to_list()


def report_run(
    out_path: Path,
    *,
    truth_dir: Path | None,
    inference_dir: Path | None,
    grades_dir: Path | None,
    config: MetricsConfig,
    acceptance: AcceptanceConfig,
    seed: int = 0,
) -> Report:
    """Evaluate whatever the run produced and write the JSON report (plus per-artery CSV)."""
    out_path.parent.mkdir(parents=True, exist_ok=True)
    segmentation = grading = artery_grading = None
    if truth_dir is not None and inference_dir is not None:
        cases = segmentation_cases(truth_dir, inference_dir)
        if cases:
            segmentation, arteries = evaluate_segmentation(cases, config)
            arteries.write_csv(out_path.with_name("arteries.csv"))
    if grades_dir is not None:
        patients = _read_grades(grades_dir / "patients.csv")
        if patients is not None:
            grading = evaluate_grading(*patients, config, seed=seed)
        artery_grades = _read_grades(grades_dir / "arteries.csv")
        if artery_grades is not None:
            artery_grading = evaluate_grading(*artery_grades, config, seed=seed)
    report = build_report(segmentation, grading, acceptance, artery_grading=artery_grading)
    write_report(report, out_path)
    log.info(f"Report written to {out_path}: passed={report.passed}")
    return report
