"""
Agreement between paired measurements of the same subjects.

Used for lesion and artery plaque volumes: the reference (truth) against
the automatic estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class PairedMeasurements:
    reference: np.ndarray
    predicted: np.ndarray

    def __post_init__(self):
        reference = np.asarray(self.reference, dtype=np.float64).ravel()
        predicted = np.asarray(self.predicted, dtype=np.float64).ravel()
        if reference.shape != predicted.shape:
            raise ValueError(
                f"paired measurements differ in length: reference {reference.size}, predicted {predicted.size}"
            )
        object.__setattr__(self, "reference", reference)
        object.__setattr__(self, "predicted", predicted)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, float]]) -> PairedMeasurements:
        values = np.asarray(pairs, dtype=np.float64).reshape(-1, 2)
        return cls(values[:, 0], values[:, 1])

    def __len__(self) -> int:
        return self.reference.size

    def _require(self, minimum: int, statistic: str) -> None:
        if len(self) < minimum:
            raise ValueError(f"{statistic} needs at least {minimum} pairs, got {len(self)}")


@dataclass(frozen=True)
class BlandAltman:
    bias: float
    lower: float
    upper: float


def icc(pairs: PairedMeasurements) -> float:
    """
    Two-way, absolute-agreement, single-measure intraclass correlation.

    ``(MS_R - MS_E) / (MS_R + MS_E + 2 (MS_C - MS_E) / n)`` from the two-way
    ANOVA of n subjects rated by the reference and the automatic method.

    Raises
    ------
    ValueError
        If fewer than two pairs are given, or both raters are constant but
        disagree (the coefficient is undefined).
    """
    pairs._require(2, "ICC")
    y = np.column_stack([pairs.reference, pairs.predicted])
    n, k = y.shape
    grand = y.mean()
    ss_rows = k * np.sum((y.mean(axis=1) - grand) ** 2)
    ss_cols = n * np.sum((y.mean(axis=0) - grand) ** 2)
    ss_error = np.sum((y - grand) ** 2) - ss_rows - ss_cols
    ms_rows = ss_rows / (n - 1)
    ms_cols = ss_cols / (k - 1)
    ms_error = ss_error / ((n - 1) * (k - 1))
    denominator = ms_rows + (k - 1) * ms_error + k * (ms_cols - ms_error) / n
    if np.ptp(pairs.reference) == 0 and np.ptp(pairs.predicted) == 0:
        if np.array_equal(pairs.reference, pairs.predicted):
            return 1.0
        raise ValueError("ICC is undefined for two constant raters that disagree")
    return float((ms_rows - ms_error) / denominator)


def bland_altman(pairs: PairedMeasurements) -> BlandAltman:
    """Bias of ``predicted - reference`` and its 95% limits of agreement."""
    pairs._require(2, "Bland-Altman analysis")
    d = pairs.predicted - pairs.reference
    bias = float(d.mean())
    spread = 1.96 * float(d.std(ddof=1))
    return BlandAltman(bias=bias, lower=bias - spread, upper=bias + spread)
