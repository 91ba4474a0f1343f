"""
Area signals as the grader sees them.

Two channels per artery: the relative change of lumen area from one slice
to the next, and the combined CP + NCP plaque area. Slices whose lumen
diameter does not exceed the minimum are masked out of both channels, and
the channels are zero-padded to a fixed length.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from tubemesh.cadrads.config import GraderConfig
from tubemesh.errors import ShapeError
from tubemesh.geometry.types import AreaSignalSet

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GradeSignal:
    lumen_pct_change: np.ndarray
    total_plaque_area: np.ndarray
    valid_length: int

    @property
    def channels(self) -> np.ndarray:
        """The network input ``(2, signal_length)``."""
        return np.stack([self.lumen_pct_change, self.total_plaque_area])


def lumen_diameter(a_l: np.ndarray) -> np.ndarray:
    return 2.0 * np.sqrt(np.maximum(a_l, 0.0) / np.pi)


def prepare_signal(areas: AreaSignalSet, config: GraderConfig | None = None) -> GradeSignal:
    """
    Build the two-channel grader input of one artery.

    The lumen channel at slice z is ``(a_l[z+1] - a_l[z]) / a_l[z]`` when
    both slices are unmasked and 0 otherwise, so a masked gap never produces
    a jump. ``valid_length`` ends at the last unmasked slice.

    Raises
    ------
    ShapeError
        If the artery has more slices than the fixed signal length.
    """
    config = config or GraderConfig()
    n = config.signal_length
    if areas.length > n:
        raise ShapeError(f"area signal has {areas.length} slices, the grader accepts at most {n}")

    keep = lumen_diameter(areas.a_l) > config.min_diameter
    lumen = np.zeros(n)
    plaque = np.zeros(n)
    if areas.length > 1:
        pairs = keep[:-1] & keep[1:]
        a_l = areas.a_l
        lumen[: areas.length - 1][pairs] = (a_l[1:][pairs] - a_l[:-1][pairs]) / a_l[:-1][pairs]
    plaque[: areas.length][keep] = areas.total_plaque[keep]

    kept = np.flatnonzero(keep)
    valid_length = int(kept[-1]) + 1 if kept.size else 0
    return GradeSignal(lumen_pct_change=lumen, total_plaque_area=plaque, valid_length=valid_length)


def stack_signals(signals: list[GradeSignal]) -> np.ndarray:
    """Batch of grader inputs ``(B, 2, signal_length)``."""
    return np.stack([s.channels for s in signals])
