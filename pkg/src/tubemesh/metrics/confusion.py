"""
Statistics of an ordinal confusion matrix, rows = reference, columns =
prediction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError(f"a confusion matrix must be square, got shape {counts.shape}")
        if (counts < 0).any() or not np.array_equal(counts, np.round(counts)):
            raise ValueError("confusion counts must be nonnegative integers")
        if counts.sum() == 0:
            raise ValueError("confusion matrix is empty")
        object.__setattr__(self, "counts", counts.astype(np.int64))

    @classmethod
    def from_labels(cls, reference: Sequence[int], predicted: Sequence[int], n_classes: int = 6) -> ConfusionMatrix:
        reference = np.asarray(reference, dtype=np.int64)
        predicted = np.asarray(predicted, dtype=np.int64)
        if reference.shape != predicted.shape:
            raise ValueError(f"{reference.size} reference labels but {predicted.size} predictions")
        for name, labels in (("reference", reference), ("predicted", predicted)):
            if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
                raise ValueError(f"{name} labels must lie in [0, {n_classes - 1}]")
        counts = np.zeros((n_classes, n_classes), dtype=np.int64)
        np.add.at(counts, (reference, predicted), 1)
        return cls(counts)

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_list(self) -> list[list[int]]:
        return self.counts.tolist()


def weighted_kappa(cm: ConfusionMatrix) -> float:
    """
    Linearly weighted Cohen's kappa.

    Disagreement weights are ``|i - j| / (k - 1)``; expected counts come from
    the outer product of the marginals. A matrix whose expected
    disagreement is zero (a single populated class) scores 1.
    """
    k = cm.n_classes
    if k < 2:
        raise ValueError("weighted kappa needs at least 2 classes")
    observed = cm.counts / cm.total
    expected = np.outer(observed.sum(axis=1), observed.sum(axis=0))
    i, j = np.indices((k, k))
    disagreement = np.abs(i - j) / (k - 1)
    chance = float((disagreement * expected).sum())
    if chance == 0:
        return 1.0
    return 1.0 - float((disagreement * observed).sum()) / chance


def mcc(cm: ConfusionMatrix) -> float:
    """Multiclass Matthews correlation; 0 when either marginal is degenerate."""
    c = cm.counts.astype(np.float64)
    s = c.sum()
    correct = np.trace(c)
    t = c.sum(axis=1)
    p = c.sum(axis=0)
    denominator = np.sqrt((s * s - p @ p) * (s * s - t @ t))
    if denominator == 0:
        return 0.0
    return float((correct * s - t @ p) / denominator)


def accuracy(cm: ConfusionMatrix) -> float:
    return float(np.trace(cm.counts) / cm.total)


def one_off_accuracy(cm: ConfusionMatrix) -> float:
    i, j = np.indices(cm.counts.shape)
    return float(cm.counts[np.abs(i - j) <= 1].sum() / cm.total)


def kappa_confidence_interval(
    reference: Sequence[int],
    predicted: Sequence[int],
    *,
    n_classes: int = 6,
    resamples: int = 2000,
    level: float = 0.95,
    seed: int = 0,
) -> tuple[float, float]:
    """
    Percentile bootstrap interval of the weighted kappa, resampling
    patients with replacement.
    """
    reference = np.asarray(reference, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if reference.size == 0:
        raise ValueError("cannot bootstrap kappa without patients")
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, reference.size, size=(resamples, reference.size))
    kappas = np.array(
        [weighted_kappa(ConfusionMatrix.from_labels(reference[d], predicted[d], n_classes)) for d in draws]
    )
    tail = (1.0 - level) / 2.0
    low, high = np.quantile(kappas, [tail, 1.0 - tail])
    return float(low), float(high)
