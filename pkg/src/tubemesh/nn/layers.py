from __future__ import annotations

from typing import Iterator

import numpy as np

from tubemesh.nn import functional as F
from tubemesh.nn.tensor import Parameter, Tensor


def kaiming_normal(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Fan-in scaled normal init for kernels of shape ``(C_out, C_in, *K)``."""
    fan_in = int(np.prod(shape[1:]))
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


class Module:
    """
    Base class for layers holding parameters, buffers and child modules.

    Attributes are walked in assignment order, which fixes the order of
    ``named_parameters`` and therefore of checkpoints and optimizer updates.
    """

    training: bool = True

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def _children(self) -> Iterator[tuple[str, object]]:
        for name, value in vars(self).items():
            if isinstance(value, (Module, Parameter)):
                yield name, value
            elif isinstance(value, list):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield f"{name}.{i}", item

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for name, child in self._children():
            full = f"{prefix}{name}"
            if isinstance(child, Parameter):
                yield full, child
            else:
                yield from child.named_parameters(prefix=f"{full}.")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
        for name in getattr(self, "buffer_names", ()):
            yield f"{prefix}{name}", getattr(self, name)
        for name, child in self._children():
            if isinstance(child, Module):
                yield from child.named_buffers(prefix=f"{prefix}{name}.")

    def train(self, mode: bool = True) -> Module:
        self.training = mode
        for _, child in self._children():
            if isinstance(child, Module):
                child.train(mode)
        return self

    def eval(self) -> Module:
        return self.train(False)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def _name_parameters(self) -> None:
        for name, p in self.named_parameters():
            p.name = name

    def parameter_count(self) -> int:
        return sum(p.data.size for p in self.parameters())


class BatchNorm(Module):
    buffer_names = ("running_mean", "running_var")

    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        self.gamma = Parameter(np.ones(channels))
        self.beta = Parameter(np.zeros(channels))
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.momentum = momentum
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        return F.batch_norm(
            x,
            self.gamma,
            self.beta,
            self.running_mean,
            self.running_var,
            training=self.training,
            momentum=self.momentum,
            eps=self.eps,
        )


class RadialConv(Module):
    """Valid convolution along R of a cylindrical map, no bias (a norm follows)."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int, rng: np.random.Generator):
        self.weight = Parameter(kaiming_normal(rng, (out_channels, in_channels, kernel_size)))

    def forward(self, x: Tensor) -> Tensor:
        return F.conv1d_radial(x, self.weight)


class CylConv(Module):
    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator):
        self.weight = Parameter(kaiming_normal(rng, (out_channels, in_channels, 3, 3, 3)))

    def forward(self, x: Tensor) -> Tensor:
        return F.conv3d_cyl(x, self.weight)


class PointwiseHead(Module):
    """Linear layer over channels applied at every site (a 1×1×1 convolution)."""

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator):
        bound = 1.0 / np.sqrt(in_channels)
        self.weight = Parameter(rng.uniform(-bound, bound, size=(out_channels, in_channels, 1, 1, 1)))
        self.bias = Parameter(np.zeros(out_channels))

    def forward(self, x: Tensor) -> Tensor:
        out = F.correlate(x, self.weight)
        return out + self.bias.reshape(1, -1, 1, 1, 1)


class Conv1d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: int = 0,
    ):
        self.weight = Parameter(kaiming_normal(rng, (out_channels, in_channels, kernel_size)))
        self.stride = stride
        self.padding = padding

    def forward(self, x: Tensor) -> Tensor:
        return F.conv1d(x, self.weight, stride=self.stride, padding=self.padding)


class Linear(Module):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        bound = 1.0 / np.sqrt(in_features)
        self.weight = Parameter(rng.uniform(-bound, bound, size=(out_features, in_features)))
        self.bias = Parameter(np.zeros(out_features))

    def forward(self, x: Tensor) -> Tensor:
        return F.linear(x, self.weight, self.bias)
