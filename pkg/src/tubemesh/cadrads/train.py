import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from tubemesh.cadrads.config import GraderConfig, GraderTrainConfig
from tubemesh.cadrads.model import GradeNet
from tubemesh.cadrads.ordinal import decode_grade, ordinal_loss, patient_grade, worst_artery
from tubemesh.cadrads.signal import GradeSignal, prepare_signal, stack_signals
from tubemesh.errors import CheckpointError, GradientError, TrainingDivergedError
from tubemesh.geometry.types import AreaSignalSet
from tubemesh.io.tables import read_patient_signals
from tubemesh.nn import AdamW, Tensor, load_checkpoint, read_manifest, save_checkpoint
from tubemesh.phantom.corpus import read_manifest as read_corpus_manifest

log = logging.getLogger(__name__)

CHECKPOINT_KIND = "cadrads"


@dataclass(frozen=True)
class GradingPatient:
    id: str
    grade: int
    signals: dict[str, GradeSignal] = field(default_factory=dict)


@dataclass(frozen=True)
class PatientGrading:
    per_artery: dict[str, int]
    outputs: dict[str, np.ndarray]
    patient_grade: int

    def to_dict(self) -> dict:
        return {
            "per_artery": [
                {"artery": name, "grade": grade, "outputs": [float(p) for p in self.outputs[name]]}
                for name, grade in self.per_artery.items()
            ],
            "patient_grade": self.patient_grade,
        }


def load_grading_corpus(corpus_dir: str | Path, config: GraderConfig | None = None) -> list[GradingPatient]:
    """Patients of a grading corpus with their prepared artery signals."""
    corpus_dir = Path(corpus_dir)
    patients = []
    for row in read_corpus_manifest(corpus_dir).iter_rows(named=True):
        arteries = read_patient_signals(corpus_dir / row["signals"])
        patients.append(
            GradingPatient(
                id=row["id"],
                grade=int(row["grade"]),
                signals={name: prepare_signal(areas, config) for name, areas in arteries.items()},
            )
        )
    return patients


def usable_patients(patients: Sequence[GradingPatient]) -> list[GradingPatient]:
    usable = []
    for patient in patients:
        if not patient.signals:
            log.warning(f"Patient '{patient.id}' has no arteries and is excluded from training")
            continue
        usable.append(patient)
    return usable


def _batch_inputs(batch: Sequence[GradingPatient]) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Every artery of the batch stacked, plus each patient's (offset, count)."""
    signals, spans = [], []
    for patient in batch:
        spans.append((len(signals), len(patient.signals)))
        signals.extend(patient.signals.values())
    return stack_signals(signals), spans


def train_grader(
    patients: Sequence[GradingPatient],
    config: GraderConfig,
    train: GraderTrainConfig,
    seed: int,
) -> GradeNet:
    """
    Train one grader against patient-level grades.

    Every artery of a patient is forwarded, but only the artery with the
    highest decoded grade (ties: largest output sum) enters the loss.

    Raises
    ------
    ValueError
        If no patient has an artery.
    TrainingDivergedError
        If the loss or a gradient stops being finite.
    """
    rng = np.random.default_rng(seed)
    model = GradeNet(config, rng)
    if train.epochs == 0:
        return model
    usable = usable_patients(patients)
    if not usable:
        raise ValueError("cannot train the grader on an empty corpus")

    optimizer = AdamW(model.parameters(), train.optimizer)
    model.train()
    for epoch in range(train.epochs):
        order = rng.permutation(len(usable))
        losses = []
        for start in range(0, len(usable), train.batch_size):
            batch = [usable[i] for i in order[start : start + train.batch_size]]
            inputs, spans = _batch_inputs(batch)
            optimizer.zero_grad()
            outputs = model(Tensor(inputs))
            rows = [
                offset + worst_artery(outputs.data[offset : offset + count], config.threshold)
                for offset, count in spans
            ]
            loss = ordinal_loss(outputs.take(np.array(rows), axis=0), [p.grade for p in batch])
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingDivergedError(f"grader loss became {value} at epoch {epoch}", seed=seed)
            try:
                loss.backward()
                lr = optimizer.step(epoch)
            except GradientError as exc:
                raise TrainingDivergedError(f"grader training diverged at epoch {epoch}: {exc}", seed=seed) from exc
            losses.append(value)
        if epoch % train.log_every == 0 or epoch == train.epochs - 1:
            log.info(f"cadrads seed={seed} epoch {epoch}: loss {np.mean(losses):.4f} lr {lr:.2e}")
    model.eval()
    return model


def train_graders(
    patients: Sequence[GradingPatient],
    config: GraderConfig,
    train: GraderTrainConfig,
    seeds: Sequence[int],
    *,
    threads: int = 1,
) -> list[GradeNet]:
    if not usable_patients(patients):
        raise ValueError("cannot train the grader on an empty corpus")
    log.info(f"Training {len(seeds)} graders on {len(patients)} patients")
    with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        return list(pool.map(lambda s: train_grader(patients, config, train, s), seeds))


def save_graders(models: Sequence[GradeNet], out_dir: str | Path, seeds: Sequence[int], epochs: int) -> list[Path]:
    out_dir = Path(out_dir)
    return [
        save_checkpoint(
            out_dir / f"cadrads_{i}.tmnn",
            model,
            kind=CHECKPOINT_KIND,
            epoch=epochs,
            seed=seed,
            config=model.config.model_dump(),
        )
        for i, (model, seed) in enumerate(zip(models, seeds))
    ]


def load_graders(model_dir: str | Path) -> list[GradeNet]:
    """
    Raises
    ------
    CheckpointError
        If the directory holds no grader checkpoint or one cannot be read.
    """
    paths = sorted(Path(model_dir).glob("cadrads_*.tmnn"))
    if not paths:
        raise CheckpointError(f"no grader checkpoints in '{model_dir}'")
    models = []
    for path in paths:
        manifest, _ = read_manifest(path)
        model = GradeNet(GraderConfig.model_validate(manifest["config"]), np.random.default_rng(0))
        load_checkpoint(path, model, kind=CHECKPOINT_KIND)
        models.append(model.eval())
    return models


def ensemble_outputs(models: Sequence[GradeNet], signals: Sequence[GradeSignal]) -> np.ndarray:
    """Sigmoid outputs ``(A, 5)`` averaged over the ensemble in model order."""
    inputs = stack_signals(list(signals))
    return np.mean([model.predict(inputs) for model in models], axis=0)


def grade_signals(models: Sequence[GradeNet], signals: dict[str, GradeSignal]) -> PatientGrading:
    if not signals:
        raise ValueError("a patient needs at least one artery to be graded")
    threshold = models[0].config.threshold
    outputs = ensemble_outputs(models, list(signals.values()))
    grades = decode_grade(outputs, threshold)
    return PatientGrading(
        per_artery={name: int(g) for name, g in zip(signals, grades)},
        outputs=dict(zip(signals, outputs)),
        patient_grade=patient_grade(outputs, threshold),
    )


def grade_patient(models: Sequence[GradeNet], arteries: dict[str, AreaSignalSet]) -> PatientGrading:
    """Grade every artery of a patient and the patient as their maximum."""
    config = models[0].config
    return grade_signals(models, {name: prepare_signal(areas, config) for name, areas in arteries.items()})
