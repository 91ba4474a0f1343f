from .config import CadradsSection, FanCnnSection, PathsConfig, PipelineConfig, resolve_threads
from .runner import STAGE_NAMES, STAGES, Stage, parse_stages, run_pipeline
from .stages import (
    cross_validate_grading,
    derive_seeds,
    grade_corpora,
    infer_corpus,
    report_run,
    segmentation_cases,
    select_fold,
    train_grading,
    train_segmentation,
)
