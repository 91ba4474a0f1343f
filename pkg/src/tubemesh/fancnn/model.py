from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tubemesh.errors import ShapeError
from tubemesh.fancnn.config import FanCnnConfig
from tubemesh.geometry.types import CylindricalVolume
from tubemesh.nn import functional as F
from tubemesh.nn import BatchNorm, CylConv, Module, PointwiseHead, RadialConv, Tensor, no_grad


@dataclass(frozen=True)
class FanCnnOutput:
    """
    Per-site network output for one artery.

    ``radii`` holds (r_l, r_cp, r_ncp) as regressed, ``class_probs`` the
    softmax over (none, CP, NCP, mixed); both are ``(channels, N_θ, L)``.
    """

    radii: np.ndarray
    class_probs: np.ndarray

    @property
    def classes(self) -> np.ndarray:
        return self.class_probs.argmax(axis=0)


class FanCnn(Module):
    """
    Fully convolutional network over a cylindrical intensity map.

    Each ray profile passes through valid convolutions along R; the
    cylindrical 3×3×3 stages mix neighbouring rays (circular in θ) and
    slices (mirrored in z). The last radial convolution collapses R to one
    position where two pointwise heads regress the radii and score the
    plaque classes.
    """

    def __init__(self, config: FanCnnConfig, rng: np.random.Generator):
        self.config = config
        c = config.features
        self.radial_convs = [
            RadialConv(1 if i == 0 else c, c, config.radial_kernel, rng) for i in range(config.radial_convs)
        ]
        self.radial_norms = [BatchNorm(c) for _ in range(config.radial_convs)]
        self.cyl_convs = [CylConv(c, c, rng) for _ in range(config.cyl_convs)]
        self.cyl_norms = [BatchNorm(c) for _ in range(config.cyl_convs)]
        self.final_conv = RadialConv(c, c, config.final_kernel, rng)
        self.final_norm = BatchNorm(c)
        self.radii_head = PointwiseHead(c, config.n_radii, rng)
        self.class_head = PointwiseHead(c, config.n_classes, rng)
        self._name_parameters()

    def forward(self, x: Tensor) -> tuple[Tensor, Tensor]:
        """
        Parameters
        ----------
        x : Tensor
            Normalised intensities of shape ``(B, 1, N_θ, R, L)``.

        Returns
        -------
        tuple[Tensor, Tensor]
            Radii ``(B, 3, N_θ, L)`` and class logits ``(B, 4, N_θ, L)``.
        """
        self._check_input(x.shape)
        for conv, norm in zip(self.radial_convs, self.radial_norms):
            x = F.relu(norm(conv(x)))
        for conv, norm in zip(self.cyl_convs, self.cyl_norms):
            x = F.relu(norm(conv(x)))
        x = F.leaky_relu(self.final_norm(self.final_conv(x)), self.config.leaky_slope)
        batch, _, n_theta, _, length = x.shape
        radii = self.radii_head(x).reshape(batch, self.config.n_radii, n_theta, length)
        logits = self.class_head(x).reshape(batch, self.config.n_classes, n_theta, length)
        return radii, logits

    def _check_input(self, shape: tuple[int, ...]) -> None:
        if len(shape) != 5 or shape[1] != 1:
            raise ShapeError(f"FanCNN expects (B, 1, N_θ, R, L), got shape {shape}")
        if shape[3] != self.config.n_radius:
            raise ShapeError(f"radius axis has extent {shape[3]}, the model expects R={self.config.n_radius}")
        if shape[2] != self.config.n_theta:
            raise ShapeError(f"theta axis has extent {shape[2]}, the model expects N_θ={self.config.n_theta}")

    def normalise(self, samples: np.ndarray) -> np.ndarray:
        return (samples - self.config.input_center) / self.config.input_scale

    def predict(self, cyl: CylindricalVolume) -> FanCnnOutput:
        """Whole-artery inference in evaluation mode (running statistics, no graph)."""
        was_training = self.training
        self.eval()
        try:
            with no_grad():
                x = Tensor(self.normalise(cyl.samples)[None, None])
                radii, logits = self.forward(x)
                probs = F.softmax(logits, axis=1)
        finally:
            self.train(was_training)
        return FanCnnOutput(radii=radii.data[0], class_probs=probs.data[0])
