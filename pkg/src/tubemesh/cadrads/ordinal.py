"""
N-hot ordinal encoding of CAD-RADS grades.

Grade g is the 5-vector with g leading ones; output i of the grader is the
probability that the grade exceeds i.
"""

from typing import Iterable, Sequence

import numpy as np

from tubemesh.cadrads.config import N_GRADES
from tubemesh.nn import Tensor

EPS = 1e-12


def encode(grade: int) -> np.ndarray:
    if not 0 <= grade <= N_GRADES:
        raise ValueError(f"CAD-RADS grade must lie in [0, {N_GRADES}], got {grade}")
    return (np.arange(N_GRADES) < grade).astype(np.float64)


def encode_batch(grades: Iterable[int]) -> np.ndarray:
    return np.stack([encode(int(g)) for g in grades])


def ordinal_loss(outputs: Tensor, grades: Sequence[int]) -> Tensor:
    """
    Binary cross-entropy of every output against the N-hot target,
    averaged over the outputs and the batch. Probabilities are clamped to
    ``[1e-12, 1 - 1e-12]`` before the logs.
    """
    target = encode_batch(grades)
    if outputs.shape != target.shape:
        raise ValueError(f"outputs have shape {outputs.shape}, targets {target.shape}")
    p = outputs.clip(EPS, 1.0 - EPS)
    bce = -(p.log() * target + (1.0 - p).log() * (1.0 - target))
    return bce.mean()


def decode_grade(outputs: np.ndarray, threshold: float = 0.5) -> np.ndarray | int:
    """Number of outputs above ``threshold``; per row for a batch."""
    counts = (np.asarray(outputs) > threshold).sum(axis=-1)
    return int(counts) if np.ndim(counts) == 0 else counts


def patient_grade(artery_outputs: np.ndarray, threshold: float = 0.5) -> int:
    """The highest decoded grade over a patient's arteries ``(A, 5)``."""
    artery_outputs = np.atleast_2d(artery_outputs)
    if artery_outputs.shape[0] == 0:
        raise ValueError("a patient needs at least one artery to be graded")
    return int(np.max(decode_grade(artery_outputs, threshold)))


def worst_artery(artery_outputs: np.ndarray, threshold: float = 0.5) -> int:
    """
    Index of the artery with the highest decoded grade; ties go to the
    largest output sum, then to the first artery.
    """
    grades = decode_grade(np.atleast_2d(artery_outputs), threshold)
    sums = np.atleast_2d(artery_outputs).sum(axis=1)
    return int(np.lexsort((-np.arange(len(sums)), sums, grades))[-1])
