class TubemeshError(Exception):
    """Base class for every error raised by tubemesh."""


class ShapeError(TubemeshError, ValueError):
    """An array does not have the extents an operation requires."""


class GradientError(TubemeshError, RuntimeError):
    """Backward pass misuse or a non-finite gradient."""


class TrainingDivergedError(GradientError):
    def __init__(self, message: str, seed: int | None = None):
        super().__init__(message if seed is None else f"{message} (seed={seed})")
        self.seed = seed


class CheckpointError(TubemeshError, ValueError):
    """A checkpoint or binary volume file cannot be read back."""


class StageError(TubemeshError, RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage
