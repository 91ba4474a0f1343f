from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from tubemesh.geometry.types import RadialField

MAX_OUTER_RADIUS = 6.2
MIN_LUMEN_RADIUS = 0.3


class HuPalette(BaseModel):
    """Tissue means and per-phantom spreads in Hounsfield units."""

    model_config = ConfigDict(extra="forbid")

    lumen: float = 350.0
    wall: float = 60.0
    cp: float = 800.0
    ncp: float = 30.0
    background: float = 60.0
    lumen_spread: float = 40.0
    wall_spread: float = 10.0
    cp_spread: float = 100.0
    ncp_spread: float = 15.0
    background_spread: float = 10.0

    def draw(self, rng: np.random.Generator) -> dict[str, float]:
        """Tissue means for one phantom, each jittered by its spread."""
        return {
            name: float(rng.normal(getattr(self, name), getattr(self, f"{name}_spread")))
            for name in ("lumen", "wall", "cp", "ncp", "background")
        }


class LesionSpec(BaseModel):
    """
    One plaque lesion.

    The lesion narrows the lumen by ``stenosis`` (fraction of reference area
    lost at ``z_center``) over its angular arc, fills the lost lumen with
    plaque and adds ``thickness`` of outward plaque. Both profiles are
    raised-cosine bumps in z and flat-topped over the arc. An occluded
    lesion has no lumen over ``occlusion_length`` around its center.
    """

    model_config = ConfigDict(extra="forbid")

    kind: Literal["CP", "NCP", "mixed"]
    z_center: float = Field(..., ge=0)
    z_length: float = Field(..., gt=0)
    theta_center: float = 0.0
    arc_degrees: float = Field(120.0, gt=0, le=360)
    thickness: float = Field(0.4, ge=0)
    stenosis: float = Field(0.0, ge=0, le=1)
    ncp_fraction: float = Field(0.5, ge=0, le=1)
    occlusion_length: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def _occlusion_needs_full_stenosis(self) -> LesionSpec:
        if self.occlusion_length > 0 and self.stenosis < 1.0:
            raise ValueError("an occluded lesion must have stenosis 1.0")
        if self.stenosis >= 1.0 and self.occlusion_length <= 0:
            raise ValueError("stenosis 1.0 requires an occlusion_length > 0")
        return self

    def z_profile(self, z: np.ndarray) -> np.ndarray:
        half = self.z_length / 2.0
        u = np.clip(np.abs(z - self.z_center) / half, 0.0, 1.0)
        return 0.5 * (1.0 + np.cos(np.pi * u))

    def theta_profile(self, theta: np.ndarray) -> np.ndarray:
        if self.arc_degrees >= 360.0:
            return np.ones_like(theta)
        delta = np.abs((theta - self.theta_center + np.pi) % (2 * np.pi) - np.pi)
        half = np.deg2rad(self.arc_degrees) / 2.0
        taper = min(np.deg2rad(20.0), half)
        flat = half - taper
        u = np.clip((delta - flat) / taper, 0.0, 1.0)
        return np.where(delta <= half, 0.5 * (1.0 + np.cos(np.pi * u)), 0.0)

    def occluded(self, z: np.ndarray) -> np.ndarray:
        return np.abs(z - self.z_center) < self.occlusion_length / 2.0


class PhantomSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    length: float = Field(30.0, gt=0)
    radius_start: float = Field(1.6, gt=0)
    radius_end: float = Field(1.3, gt=0)
    lesions: list[LesionSpec] = Field(default_factory=list)
    palette: HuPalette = Field(default_factory=HuPalette)
    wall_thickness: float = Field(0.3, ge=0)
    noise_sigma: float = Field(20.0, ge=0)
    seed: int = 0
    n_theta: int = Field(16, ge=3)
    dz: float = Field(0.5, gt=0)
    in_plane_spacing: float = Field(0.1, gt=0)
    fov: float = Field(12.7, gt=0)

    @model_validator(mode="after")
    def _lesions_inside_vessel(self) -> PhantomSpec:
        for i, lesion in enumerate(self.lesions):
            low = lesion.z_center - lesion.z_length / 2.0
            high = lesion.z_center + lesion.z_length / 2.0
            if low < 0 or high > self.length:
                raise ValueError(
                    f"lesion {i} spans [{low:.2f}, {high:.2f}] mm, outside the vessel length {self.length} mm"
                )
        if self.n_slices < 2:
            raise ValueError(f"vessel of {self.length} mm has fewer than two slices at dz={self.dz}")
        return self

    @property
    def n_slices(self) -> int:
        return int(round(self.length / self.dz))

    @property
    def z(self) -> np.ndarray:
        return np.arange(self.n_slices) * self.dz

    def reference_radius(self) -> np.ndarray:
        """Healthy lumen radius per slice (linear taper)."""
        t = self.z / max(self.length, 1e-12)
        return self.radius_start + (self.radius_end - self.radius_start) * t


@dataclass(frozen=True)
class PhantomTruth:
    """
    Exact ground truth of a phantom: the generator field on the (θ, z) grid,
    the healthy lumen radius and stenosis percent per slice, the CAD-RADS
    grade of the worst stenosis and the slices inside an occlusion core.
    """

    field: RadialField
    reference_radius: np.ndarray
    stenosis: np.ndarray
    grade: int
    occluded: np.ndarray
