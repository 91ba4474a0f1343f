from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from tubemesh.geometry.lesions import Lesion
from tubemesh.metrics.agreement import PairedMeasurements


@dataclass(frozen=True)
class LesionDetection:
    """
    Lesion matching over a set of arteries.

    A reference lesion is detected when some predicted lesion shares at
    least one (θ, z) vertex with it; its paired predicted volume is the sum
    over every overlapping prediction. Predictions overlapping no reference
    lesion are false positives.
    """

    arteries: int
    reference_lesions: int
    predicted_lesions: int
    true_positives: int
    false_positives: int
    pairs: PairedMeasurements

    @property
    def sensitivity(self) -> float:
        if self.reference_lesions == 0:
            return 0.0
        return self.true_positives / self.reference_lesions

    @property
    def tp_per_artery(self) -> float:
        return self.true_positives / self.arteries if self.arteries else 0.0

    @property
    def fp_per_artery(self) -> float:
        return self.false_positives / self.arteries if self.arteries else 0.0


def match_lesions(reference: Sequence[Lesion], predicted: Sequence[Lesion]) -> np.ndarray:
    """Overlap matrix ``(len(reference), len(predicted))`` of shared vertices."""
    overlap = np.zeros((len(reference), len(predicted)), dtype=bool)
    for i, ref in enumerate(reference):
        for j, pred in enumerate(predicted):
            overlap[i, j] = ref.overlaps(pred)
    return overlap


def lesion_detection(
    reference: Sequence[Sequence[Lesion]], predicted: Sequence[Sequence[Lesion]]
) -> LesionDetection:
    """
    Match lesions artery by artery; ``reference[a]`` and ``predicted[a]``
    are the lesions of artery ``a``.
    """
    if len(reference) != len(predicted):
        raise ValueError(f"{len(reference)} reference arteries but {len(predicted)} predicted")
    true_positives = false_positives = 0
    pairs: list[tuple[float, float]] = []
    for ref, pred in zip(reference, predicted):
        overlap = match_lesions(ref, pred)
        volumes = np.array([p.volume for p in pred], dtype=np.float64)
        for i, lesion in enumerate(ref):
            if overlap[i].any():
                true_positives += 1
                pairs.append((lesion.volume, float(volumes[overlap[i]].sum())))
        false_positives += int((~overlap.any(axis=0)).sum()) if len(pred) else 0
    return LesionDetection(
        arteries=len(reference),
        reference_lesions=sum(len(r) for r in reference),
        predicted_lesions=sum(len(p) for p in predicted),
        true_positives=true_positives,
        false_positives=false_positives,
        pairs=PairedMeasurements.from_pairs(pairs),
    )
