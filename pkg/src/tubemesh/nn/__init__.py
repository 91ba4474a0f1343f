from .checkpoint import load_checkpoint, read_manifest, save_checkpoint
from .functional import (
    batch_norm,
    conv1d,
    conv1d_radial,
    conv3d_cyl,
    correlate,
    global_maxpool,
    leaky_relu,
    linear,
    log_softmax,
    maxpool1d,
    relu,
    sigmoid,
    softmax,
)
from .layers import BatchNorm, Conv1d, CylConv, Linear, Module, PointwiseHead, RadialConv
from .optim import AdamW, OptimizerConfig, learning_rate_at
from .tensor import Parameter, Tensor, concatenate, is_grad_enabled, no_grad, stack
