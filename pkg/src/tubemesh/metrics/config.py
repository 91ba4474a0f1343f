from pydantic import BaseModel, ConfigDict, Field

from tubemesh.geometry.lesions import LESION_MIN_RADIUS
from tubemesh.geometry.voxelize import DEFAULT_SPACING


class MetricsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lesion_min_radius: float = Field(LESION_MIN_RADIUS, ge=0)
    spacing: tuple[float, float, float] = DEFAULT_SPACING
    samples_per_face: int = Field(4, ge=1)
    kappa_resamples: int = Field(2000, ge=1)
    kappa_level: float = Field(0.95, gt=0, lt=1)


class AcceptanceConfig(BaseModel):
    """Thresholds the pipeline report must meet for a zero exit code."""

    model_config = ConfigDict(extra="forbid")

    lumen_mae: float = 0.1
    icc_cp: float = 0.95
    icc_ncp: float = 0.80
    icc_total: float = 0.85
    attention_fp_ratio: float = Field(0.5, ge=0)
    kappa: float = 0.8
    one_off: float = 0.95
