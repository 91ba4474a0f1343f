from .attention import classifier_attention, component_votes
from .config import CATEGORIES, FanCnnConfig, FanCnnTrainConfig
from .loss import fancnn_loss
from .model import FanCnn, FanCnnOutput
from .sampling import (
    PatchBatch,
    PatchCorpus,
    MAX_JITTER_DRAWS,
    balanced_categories,
    draw_origin,
    flip_patch,
    lumen_contains,
    sample_batch,
    sample_patch,
    slice_categories,
    window_indices,
)
from .train import infer_field, infer_output, load_ensemble, save_ensemble, train_ensemble, train_fancnn
