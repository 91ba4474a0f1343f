from .agreement import BlandAltman, PairedMeasurements, bland_altman, icc
from .config import AcceptanceConfig, MetricsConfig
from .confusion import (
    ConfusionMatrix,
    accuracy,
    kappa_confidence_interval,
    mcc,
    one_off_accuracy,
    weighted_kappa,
)
from .detection import LesionDetection, lesion_detection, match_lesions
from .report import (
    AgreementStats,
    DetectionStats,
    GradingReport,
    Report,
    SegmentationCase,
    SegmentationReport,
    agreement_stats,
    build_report,
    check_acceptance,
    evaluate_grading,
    evaluate_segmentation,
    read_report,
    write_report,
)
from .split import fold_split, kfold_indices
