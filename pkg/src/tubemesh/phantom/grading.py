import numpy as np

from tubemesh.geometry.areas import fan_area
from tubemesh.geometry.types import RadialField

# upper bin edges (exclusive) of CAD-RADS 0..4; 100 % is grade 5
GRADE_EDGES = (0.0, 25.0, 50.0, 70.0, 100.0)


def stenosis_to_grade(max_stenosis_percent: float) -> int:
    """
    CAD-RADS grade of a maximum stenosis percentage.

    0 % is grade 0, then 1-24, 25-49, 50-69 and 70-99 % are grades 1 to 4
    and a total occlusion (100 %) is grade 5.

    Raises
    ------
    ValueError
        If the percentage is not a number in [0, 100].
    """
    value = float(max_stenosis_percent)
    if not 0.0 <= value <= 100.0:
        raise ValueError(f"stenosis must lie in [0, 100] %, got {max_stenosis_percent}")
    if value == 0.0:
        return 0
    if value == 100.0:
        return 5
    return int(np.searchsorted(GRADE_EDGES, value, side="right"))


def stenosis_from_areas(a_l: np.ndarray, a_ref: np.ndarray) -> np.ndarray:
    """``100 · (1 − a_l / a_ref)`` per slice, clamped to [0, 100]."""
    a_l = np.asarray(a_l, dtype=np.float64)
    a_ref = np.asarray(a_ref, dtype=np.float64)
    if (a_ref <= 0).any():
        raise ValueError(f"reference lumen area must be positive, got min {a_ref.min():.4g} mm²")
    percent = 100.0 * (1.0 - a_l / a_ref)
    # absorbs round-off so exact bin edges grade as intended
    return np.clip(np.round(percent, 9), 0.0, 100.0)


def reference_area(reference_radius: np.ndarray, n_theta: int) -> np.ndarray:
    """Fan area of the healthy lumen polygon per slice."""
    radius = np.asarray(reference_radius, dtype=np.float64)
    return fan_area(np.broadcast_to(radius, (n_theta, radius.size)))


def stenosis_profile(field: RadialField, reference_radius: np.ndarray) -> np.ndarray:
    """Stenosis percent per slice of ``field`` against the healthy lumen radius."""
    return stenosis_from_areas(fan_area(field.r_l), reference_area(reference_radius, field.n_theta))
