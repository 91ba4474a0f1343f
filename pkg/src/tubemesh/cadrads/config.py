from pydantic import BaseModel, ConfigDict, Field, field_validator

from tubemesh.nn.optim import OptimizerConfig

N_GRADES = 5


class GraderConfig(BaseModel):
    """Signal preparation and 1D ResNet layout of the CAD-RADS grader."""

    model_config = ConfigDict(extra="forbid")

    signal_length: int = Field(512, ge=64)
    min_diameter: float = Field(1.5, ge=0)
    stem_channels: int = Field(8, ge=1)
    stem_kernel: int = Field(7, ge=1)
    block_widths: list[int] = Field(default_factory=lambda: [16, 32, 64])
    threshold: float = Field(0.5, gt=0, lt=1)

    @field_validator("stem_kernel")
    @classmethod
    def _odd_kernel(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError(f"stem_kernel must be odd so the stem keeps its alignment, got {value}")
        return value

    @field_validator("block_widths")
    @classmethod
    def _some_blocks(cls, value: list[int]) -> list[int]:
        if not value or any(w < 1 for w in value):
            raise ValueError(f"block_widths needs at least one positive width, got {value}")
        return value


class GraderTrainConfig(BaseModel):
    """One epoch is one pass over the training patients in batches."""

    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(1200, ge=0)
    batch_size: int = Field(32, ge=1)
    ensemble: int = Field(5, ge=1)
    log_every: int = Field(100, ge=1)
    optimizer: OptimizerConfig = Field(
        default_factory=lambda: OptimizerConfig(milestones=[600, 800, 1000])
    )
