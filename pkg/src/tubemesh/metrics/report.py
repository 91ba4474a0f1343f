"""
Evaluation report: segmentation quality, lesion detection and agreement,
and CAD-RADS grading statistics, serialised as JSON.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import polars as pl
from pydantic import BaseModel

from tubemesh.geometry.distances import dice, surface_metrics
from tubemesh.geometry.lesions import extract_lesions
from tubemesh.geometry.mesh import tube_mesh
from tubemesh.geometry.types import LABEL_LUMEN, RadialField
from tubemesh.geometry.voxelize import voxelize
from tubemesh.metrics.agreement import PairedMeasurements, bland_altman, icc
from tubemesh.metrics.config import AcceptanceConfig, MetricsConfig
from tubemesh.metrics.confusion import (
    ConfusionMatrix,
    accuracy,
    kappa_confidence_interval,
    mcc,
    one_off_accuracy,
    weighted_kappa,
)
from tubemesh.metrics.detection import LesionDetection, lesion_detection

log = logging.getLogger(__name__)

PLAQUE_KINDS = ("CP", "NCP", "total")


class AgreementStats(BaseModel):
    n: int
    icc: float | None = None
    bias: float | None = None
    loa: tuple[float, float] | None = None


class DetectionStats(BaseModel):
    sensitivity: float
    tp_per_artery: float
    fp_per_artery: float
    reference_lesions: int
    predicted_lesions: int
    true_positives: int
    false_positives: int
    agreement: AgreementStats


class PlaqueReport(BaseModel):
    lesions: DetectionStats
    lesions_without_attention: DetectionStats | None = None
    artery_volumes: AgreementStats


class LumenQuality(BaseModel):
    arteries: int
    dice: float | None = None
    msd: float | None = None
    hd: float | None = None


class SegmentationReport(BaseModel):
    arteries: int
    lumen_mae: float
    plaque: dict[str, PlaqueReport]
    lumen: dict[str, LumenQuality]


class GradingReport(BaseModel):
    patients: int
    confusion: list[list[int]]
    kappa: float
    kappa_ci: tuple[float, float]
    mcc: float
    accuracy: float
    one_off: float


class Report(BaseModel):
    segmentation: SegmentationReport | None = None
    grading: GradingReport | None = None
    artery_grading: GradingReport | None = None
    acceptance: dict[str, bool] = {}
    passed: bool = False


@dataclass(frozen=True)
class SegmentationCase:
    """One evaluated artery: its truth, the inferred field and optionally the field without classifier attention."""

    id: str
    truth: RadialField
    predicted: RadialField
    raw: RadialField | None = None

    @property
    def healthy(self) -> bool:
        return not (self.truth.r_cp.any() or self.truth.r_ncp.any())


def agreement_stats(pairs: PairedMeasurements) -> AgreementStats:
    """ICC and Bland-Altman of the pairs; left empty below two pairs or when undefined."""
    if len(pairs) < 2:
        return AgreementStats(n=len(pairs))
    limits = bland_altman(pairs)
    try:
        coefficient = icc(pairs)
    except ValueError as exc:
        log.warning(f"ICC skipped: {exc}")
        coefficient = None
    return AgreementStats(n=len(pairs), icc=coefficient, bias=limits.bias, loa=(limits.lower, limits.upper))


def detection_stats(detection: LesionDetection) -> DetectionStats:
    return DetectionStats(
        sensitivity=detection.sensitivity,
        tp_per_artery=detection.tp_per_artery,
        fp_per_artery=detection.fp_per_artery,
        reference_lesions=detection.reference_lesions,
        predicted_lesions=detection.predicted_lesions,
        true_positives=detection.true_positives,
        false_positives=detection.false_positives,
        agreement=agreement_stats(detection.pairs),
    )


def _lesions(fields: Sequence[RadialField], kind: str, config: MetricsConfig):
    return [extract_lesions(f, kind, config.lesion_min_radius, config.spacing) for f in fields]


def _mean(values: list[float]) -> float | None:
    return float(np.mean(values)) if values else None


def evaluate_segmentation(
    cases: Sequence[SegmentationCase], config: MetricsConfig | None = None
) -> tuple[SegmentationReport, pl.DataFrame]:
    """
    Score inferred fields against their truth.

    Returns
    -------
    tuple[SegmentationReport, pl.DataFrame]
        The aggregate report and one row per artery with its lumen scores
        and plaque volumes.
    """
    config = config or MetricsConfig()
    if not cases:
        raise ValueError("no arteries to evaluate")
    rows = []
    for case in cases:
        truth_vox = voxelize(case.truth, config.spacing)
        pred_vox = voxelize(case.predicted, config.spacing)
        msd, hd = surface_metrics(
            tube_mesh(case.truth.r_l, case.truth.dz),
            tube_mesh(case.predicted.r_l, case.predicted.dz),
            config.samples_per_face,
        )
        row = {
            "id": case.id,
            "healthy": case.healthy,
            "lumen_mae": float(np.abs(case.predicted.r_l - case.truth.r_l).mean()),
            "dice": dice(truth_vox.mask(LABEL_LUMEN), pred_vox.mask(LABEL_LUMEN)),
            "msd": msd,
            "hd": hd,
        }
        for kind in ("cp", "ncp", "total"):
            row[f"{kind}_reference"] = truth_vox.volumes[kind]
            row[f"{kind}_predicted"] = pred_vox.volumes[kind]
        rows.append(row)
        log.debug(f"{case.id}: dice {row['dice']:.3f}, MSD {msd:.3f} mm, HD {hd:.3f} mm")
    arteries = pl.DataFrame(rows)

    truths = [c.truth for c in cases]
    plaque = {}
    for kind in PLAQUE_KINDS:
        reference = _lesions(truths, kind, config)
        predicted = _lesions([c.predicted for c in cases], kind, config)
        with_attention = detection_stats(lesion_detection(reference, predicted))
        without = None
        if all(c.raw is not None for c in cases):
            without = detection_stats(lesion_detection(reference, _lesions([c.raw for c in cases], kind, config)))
        column = kind.lower()
        volumes = PairedMeasurements(
            arteries.get_column(f"{column}_reference").to_numpy(),
            arteries.get_column(f"{column}_predicted").to_numpy(),
        )
        plaque[kind] = PlaqueReport(
            lesions=with_attention,
            lesions_without_attention=without,
            artery_volumes=agreement_stats(volumes),
        )

    lumen = {}
    for group, selected in (
        ("all", arteries),
        ("healthy", arteries.filter(pl.col("healthy"))),
        ("diseased", arteries.filter(~pl.col("healthy"))),
    ):
        lumen[group] = LumenQuality(
            arteries=selected.height,
            dice=_mean(selected.get_column("dice").to_list()),
            msd=_mean(selected.get_column("msd").to_list()),
            hd=_mean(selected.get_column("hd").to_list()),
        )

    report = SegmentationReport(
        arteries=len(cases),
        lumen_mae=float(arteries.get_column("lumen_mae").mean()),
        plaque=plaque,
        lumen=lumen,
    )
    return report, arteries


def evaluate_grading(
    reference: Sequence[int], predicted: Sequence[int], config: MetricsConfig | None = None, *, seed: int = 0
) -> GradingReport:
    config = config or MetricsConfig()
    cm = ConfusionMatrix.from_labels(reference, predicted)
    return GradingReport(
        patients=cm.total,
        confusion=cm.to_list(),
        kappa=weighted_kappa(cm),
        kappa_ci=kappa_confidence_interval(
            reference, predicted, resamples=config.kappa_resamples, level=config.kappa_level, seed=seed
        ),
        mcc=mcc(cm),
        accuracy=accuracy(cm),
        one_off=one_off_accuracy(cm),
    )


def check_acceptance(
    segmentation: SegmentationReport | None, grading: GradingReport | None, acceptance: AcceptanceConfig
) -> dict[str, bool]:
    """Pass/fail of every threshold whose statistic is present."""
    checks: dict[str, bool] = {}
    if segmentation is not None:
        checks["lumen_mae"] = segmentation.lumen_mae < acceptance.lumen_mae
        for kind, threshold in (("CP", acceptance.icc_cp), ("NCP", acceptance.icc_ncp), ("total", acceptance.icc_total)):
            value = segmentation.plaque[kind].lesions.agreement.icc
            checks[f"icc_{kind.lower()}"] = value is not None and value > threshold
        ncp = segmentation.plaque["NCP"]
        if ncp.lesions_without_attention is not None:
            limit = acceptance.attention_fp_ratio * ncp.lesions_without_attention.fp_per_artery
            checks["attention_fp"] = ncp.lesions.fp_per_artery <= limit
    if grading is not None:
        checks["kappa"] = grading.kappa > acceptance.kappa
        checks["one_off"] = grading.one_off > acceptance.one_off
    return checks


def build_report(
    segmentation: SegmentationReport | None,
    grading: GradingReport | None,
    acceptance: AcceptanceConfig | None = None,
    *,
    artery_grading: GradingReport | None = None,
) -> Report:
    """
    Assemble the report. ``artery_grading`` scores grades predicted from
    segmented arteries and is informational; it takes no part in acceptance.
    """
    checks = check_acceptance(segmentation, grading, acceptance or AcceptanceConfig())
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        log.warning(f"Acceptance thresholds not met: {failed}")
    return Report(
        segmentation=segmentation,
        grading=grading,
        artery_grading=artery_grading,
        acceptance=checks,
        passed=bool(checks) and not failed,
    )


def write_report(report: Report, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.model_dump_json(indent=2))
    return path


def read_report(path: str | Path) -> Report:
    return Report.model_validate_json(Path(path).read_text())
