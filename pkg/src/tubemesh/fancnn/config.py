from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from tubemesh.nn import OptimizerConfig

CATEGORIES = ("none", "CP", "NCP", "mixed")


class FanCnnConfig(BaseModel):
    """
    Shape of the network: ray grid, layer counts and the post-processing
    radius of classifier attention.

    The valid convolutions along R must consume the whole ray so that both
    heads see one radial position per (θ, z) site.
    """

    model_config = ConfigDict(extra="forbid")

    n_theta: int = Field(16, ge=3)
    n_radius: int = Field(32, ge=1)
    dr: float = Field(0.2, gt=0)
    radial_convs: int = Field(2, ge=0)
    radial_kernel: int = Field(7, ge=1)
    features: int = Field(16, ge=1)
    cyl_convs: int = Field(7, ge=0)
    final_kernel: int = Field(6, ge=1)
    n_classes: int = 4
    n_radii: int = 3
    leaky_slope: float = Field(0.01, ge=0)
    ca_min_radius: float = Field(0.15, ge=0)
    input_center: float = 100.0
    input_scale: float = Field(400.0, gt=0)

    @property
    def radial_extent(self) -> int:
        """R left after every valid convolution of the stack."""
        extent = self.n_radius - self.radial_convs * (self.radial_kernel - 1)
        extent -= 2 * self.cyl_convs
        return extent - (self.final_kernel - 1)

    @model_validator(mode="after")
    def _stack_reaches_one(self) -> "FanCnnConfig":
        if self.radial_extent != 1:
            raise ValueError(
                f"the convolution stack leaves a radial extent of {self.radial_extent}, it must be 1; "
                f"set final_kernel to {self.final_kernel + self.radial_extent - 1}"
            )
        if self.n_classes != len(CATEGORIES) or self.n_radii != 3:
            raise ValueError("the heads predict 3 radii and 4 plaque classes")
        return self


class FanCnnTrainConfig(BaseModel):
    """Balanced patch training; one epoch is one batch."""

    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(600, ge=0)
    batch_size: int = Field(32, ge=4)
    patch_slices: int = Field(21, ge=1)
    max_jitter: float = Field(0.6, ge=0)
    flip_probability: float = Field(0.5, ge=0, le=1)
    ensemble: int = Field(3, ge=1)
    log_every: int = Field(50, ge=1)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)

    @field_validator("batch_size")
    @classmethod
    def _balanced_batches(cls, value: int) -> int:
        if value % len(CATEGORIES):
            raise ValueError(f"batch_size must be a multiple of {len(CATEGORIES)}, got {value}")
        return value

    @field_validator("patch_slices")
    @classmethod
    def _odd_window(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError(f"patch_slices must be odd so the patch has a central slice, got {value}")
        return value
