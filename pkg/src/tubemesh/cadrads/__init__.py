from .config import N_GRADES, GraderConfig, GraderTrainConfig
from .model import BasicBlock, GradeNet
from .ordinal import decode_grade, encode, encode_batch, ordinal_loss, patient_grade, worst_artery
from .signal import GradeSignal, lumen_diameter, prepare_signal, stack_signals
from .train import (
    GradingPatient,
    PatientGrading,
    ensemble_outputs,
    grade_patient,
    grade_signals,
    load_graders,
    load_grading_corpus,
    save_graders,
    train_grader,
    train_graders,
    usable_patients,
)
