import logging
import os
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field

from tubemesh.cadrads.config import GraderConfig, GraderTrainConfig
from tubemesh.fancnn.config import FanCnnConfig, FanCnnTrainConfig
from tubemesh.metrics.config import AcceptanceConfig, MetricsConfig
from tubemesh.phantom.corpus import PhantomCorpusConfig

log = logging.getLogger(__name__)

THREADS_ENV = "TUBEMESH_THREADS"


class PathsConfig(BaseModel):
    """Artifact layout below one run directory."""

    model_config = ConfigDict(extra="forbid")

    root: Path = Path("runs/default")

    @property
    def arteries_train(self) -> Path:
        return self.root / "phantoms" / "arteries_train"

    @property
    def arteries_test(self) -> Path:
        return self.root / "phantoms" / "arteries_test"

    @property
    def patients_train(self) -> Path:
        return self.root / "phantoms" / "patients_train"

    @property
    def patients_test(self) -> Path:
        return self.root / "phantoms" / "patients_test"

    @property
    def fancnn_models(self) -> Path:
        return self.root / "models" / "fancnn"

    @property
    def cadrads_models(self) -> Path:
        return self.root / "models" / "cadrads"

    @property
    def inference(self) -> Path:
        return self.root / "inference"

    @property
    def grades(self) -> Path:
        return self.root / "grades"

    @property
    def report(self) -> Path:
        return self.root / "report.json"


class FanCnnSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: FanCnnConfig = Field(default_factory=FanCnnConfig)
    train: FanCnnTrainConfig = Field(default_factory=FanCnnTrainConfig)


class CadradsSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: GraderConfig = Field(default_factory=GraderConfig)
    train: GraderTrainConfig = Field(default_factory=GraderTrainConfig)


class PipelineConfig(BaseModel):
    """Every setting of a pipeline run; unknown keys are rejected at any depth."""

    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    phantom: PhantomCorpusConfig = Field(default_factory=PhantomCorpusConfig)
    fancnn: FanCnnSection = Field(default_factory=FanCnnSection)
    cadrads: CadradsSection = Field(default_factory=CadradsSection)
    metrics: MetricsConfig = Field(default_factory=MetricsConfig)
    acceptance: AcceptanceConfig = Field(default_factory=AcceptanceConfig)
    paths: PathsConfig = Field(default_factory=PathsConfig)

    @classmethod
    def load(cls, path: str | Path | None = None) -> "PipelineConfig":
        """Read a JSON config file, or the defaults when ``path`` is None."""
        if path is None:
            return cls()
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file '{path}' does not exist")
        return cls.model_validate_json(path.read_text())


def resolve_threads(threads: int | None) -> int:
    """``threads`` if given, else ``TUBEMESH_THREADS``, else 1."""
    if threads is not None:
        value, source = threads, "--threads"
    else:
        raw = os.environ.get(THREADS_ENV)
        if raw is None:
            return 1
        try:
            value = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got '{raw}'") from None
        source = THREADS_ENV
    if value < 1:
        raise ValueError(f"{source} must be at least 1, got {value}")
    return value
