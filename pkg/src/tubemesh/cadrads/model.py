from __future__ import annotations

import numpy as np

from tubemesh.cadrads.config import N_GRADES, GraderConfig
from tubemesh.errors import ShapeError
from tubemesh.nn import functional as F
from tubemesh.nn import BatchNorm, Conv1d, Linear, Module, Tensor, no_grad


class BasicBlock(Module):
    """
    Two 3-tap convolutions, the first of stride 2, with a strided 1×1
    projection on the shortcut.
    """

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator):
        self.conv1 = Conv1d(in_channels, out_channels, 3, rng, stride=2, padding=1)
        self.norm1 = BatchNorm(out_channels)
        self.conv2 = Conv1d(out_channels, out_channels, 3, rng, padding=1)
        self.norm2 = BatchNorm(out_channels)
        self.shortcut = Conv1d(in_channels, out_channels, 1, rng, stride=2)
        self.shortcut_norm = BatchNorm(out_channels)

    def forward(self, x: Tensor) -> Tensor:
        out = F.relu(self.norm1(self.conv1(x)))
        out = self.norm2(self.conv2(out))
        return F.relu(out + self.shortcut_norm(self.shortcut(x)))


class GradeNet(Module):
    """
    1D ResNet mapping an artery's two area channels to five ordinal
    sigmoid outputs, one per grade threshold.
    """

    def __init__(self, config: GraderConfig, rng: np.random.Generator):
        self.config = config
        stem = config.stem_channels
        self.stem = Conv1d(2, stem, config.stem_kernel, rng, stride=2, padding=config.stem_kernel // 2)
        self.stem_norm = BatchNorm(stem)
        widths = [stem, *config.block_widths]
        self.blocks = [BasicBlock(a, b, rng) for a, b in zip(widths[:-1], widths[1:])]
        self.head = Linear(widths[-1], N_GRADES, rng)
        self._name_parameters()

    def forward(self, x: Tensor) -> Tensor:
        """Sigmoid outputs ``(B, 5)`` for inputs ``(B, 2, signal_length)``."""
        if x.ndim != 3 or x.shape[1] != 2:
            raise ShapeError(f"the grader expects (B, 2, L), got shape {x.shape}")
        if x.shape[2] != self.config.signal_length:
            raise ShapeError(
                f"length axis has extent {x.shape[2]}, the grader expects L={self.config.signal_length}"
            )
        x = F.relu(self.stem_norm(self.stem(x)))
        x = F.maxpool1d(x, kernel_size=3, stride=2, padding=1)
        for block in self.blocks:
            x = block(x)
        return F.sigmoid(self.head(F.global_maxpool(x, axis=-1)))

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        """Evaluation-mode outputs for a ``(B, 2, L)`` batch, without a graph."""
        was_training = self.training
        self.eval()
        try:
            with no_grad():
                return self.forward(Tensor(inputs)).data
        finally:
            self.train(was_training)
