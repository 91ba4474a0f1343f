"""
Differentiable layer primitives.

Feature maps are laid out channel-first with a leading batch axis:
``(B, C, *spatial)``. The cylindrical network uses ``(B, C, Θ, R, Z)`` and the
grading network ``(B, C, L)``.
"""

from __future__ import annotations

import itertools

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from tubemesh.errors import ShapeError
from tubemesh.nn.tensor import Tensor, as_tensor

AXIS_NAMES_CYL = ("batch", "channel", "theta", "radius", "z")


def _axis_name(axis: int, ndim: int) -> str:
    if ndim == 5:
        return AXIS_NAMES_CYL[axis]
    return ("batch", "channel", "length")[axis] if ndim == 3 else f"axis {axis}"


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return Tensor.make(x.data * mask, (x,), lambda g: x.accumulate(g * mask))


def leaky_relu(x: Tensor, slope: float = 0.01) -> Tensor:
    factor = np.where(x.data > 0, 1.0, slope)
    return Tensor.make(x.data * factor, (x,), lambda g: x.accumulate(g * factor))


def sigmoid(x: Tensor) -> Tensor:
    out = np.empty_like(x.data)
    positive = x.data >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-x.data[positive]))
    expx = np.exp(x.data[~positive])
    out[~positive] = expx / (1.0 + expx)
    return Tensor.make(out, (x,), lambda g: x.accumulate(g * out * (1.0 - out)))


def softmax(x: Tensor, axis: int = 1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        x.accumulate(out * (g - (g * out).sum(axis=axis, keepdims=True)))

    return Tensor.make(out, (x,), backward)


def log_softmax(x: Tensor, axis: int = 1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    probs = np.exp(out)

    def backward(g):
        x.accumulate(g - probs * g.sum(axis=axis, keepdims=True))

    return Tensor.make(out, (x,), backward)


# -- padding -----------------------------------------------------------------


def circular_indices(extent: int, width: int) -> np.ndarray:
    return np.arange(-width, extent + width) % extent


def symmetric_indices(extent: int, width: int) -> np.ndarray:
    """Half-sample mirror: the edge sample is repeated (``abc|cba``)."""
    return np.pad(np.arange(extent), width, mode="symmetric")


def pad_circular(x: Tensor, axis: int, width: int) -> Tensor:
    return x.take(circular_indices(x.shape[axis], width), axis=axis)


def pad_symmetric(x: Tensor, axis: int, width: int) -> Tensor:
    return x.take(symmetric_indices(x.shape[axis], width), axis=axis)


def pad_zeros(x: Tensor, axis: int, width: int) -> Tensor:
    pads = [(0, 0)] * x.ndim
    pads[axis] = (width, width)
    core = [slice(None)] * x.ndim
    core[axis] = slice(width, width + x.shape[axis])
    core = tuple(core)
    return Tensor.make(np.pad(x.data, pads), (x,), lambda g: x.accumulate(g[core]))


# -- convolution ---------------------------------------------------------------


def _windows(offsets, out_shape, strides) -> tuple[slice, ...]:
    return (slice(None), slice(None)) + tuple(
        slice(o, o + s * (n - 1) + 1, s) for o, n, s in zip(offsets, out_shape, strides)
    )


def correlate(x: Tensor, kernel: Tensor, stride: int | tuple[int, ...] = 1) -> Tensor:
    """
    Valid (unpadded) cross-correlation over every spatial axis.

    Parameters
    ----------
    x : Tensor
        Input of shape ``(B, C, *S)``.
    kernel : Tensor
        Kernel of shape ``(C', C, *K)`` with ``len(K) == len(S)``.
    stride : int | tuple[int, ...], optional
        Step per spatial axis, by default 1.

    Returns
    -------
    Tensor
        Output of shape ``(B, C', *S')`` with ``S' = (S - K) // stride + 1``.

    Raises
    ------
    ShapeError
        If channel counts disagree or a spatial axis is shorter than the kernel.
    """
    kernel = as_tensor(kernel)
    xd, wd = x.data, kernel.data
    n_spatial = xd.ndim - 2
    if wd.ndim != n_spatial + 2:
        raise ShapeError(
            f"kernel rank {wd.ndim} does not match input rank {xd.ndim} (expected {n_spatial + 2})"
        )
    if wd.shape[1] != xd.shape[1]:
        raise ShapeError(
            f"channel axis mismatch: input has {xd.shape[1]} channels, kernel expects {wd.shape[1]}"
        )
    strides = (stride,) * n_spatial if isinstance(stride, int) else tuple(stride)
    out_shape = []
    for i, (n, k, s) in enumerate(zip(xd.shape[2:], wd.shape[2:], strides)):
        if n < k:
            name = _axis_name(i + 2, xd.ndim)
            raise ShapeError(f"{name} axis has extent {n}, smaller than kernel size {k}")
        out_shape.append((n - k) // s + 1)
    out_shape = tuple(out_shape)

    taps = list(itertools.product(*(range(k) for k in wd.shape[2:])))
    out = np.zeros((xd.shape[0], wd.shape[0]) + out_shape)
    for tap in taps:
        tap_kernel = wd[(slice(None), slice(None)) + tap]
        patch = xd[_windows(tap, out_shape, strides)]
        out += np.moveaxis(np.tensordot(tap_kernel, patch, axes=([1], [1])), 0, 1)

    def backward(g):
        reduce_axes = (0,) + tuple(range(2, g.ndim))
        grad_x = np.zeros_like(xd) if x.requires_grad else None
        grad_w = np.zeros_like(wd) if kernel.requires_grad else None
        for tap in taps:
            window = _windows(tap, out_shape, strides)
            if grad_w is not None:
                grad_w[(slice(None), slice(None)) + tap] = np.tensordot(
                    g, xd[window], axes=(reduce_axes, reduce_axes)
                )
            if grad_x is not None:
                tap_kernel = wd[(slice(None), slice(None)) + tap]
                grad_x[window] += np.moveaxis(
                    np.tensordot(tap_kernel, g, axes=([0], [1])), 0, 1
                )
        if grad_x is not None:
            x.accumulate(grad_x)
        if grad_w is not None:
            kernel.accumulate(grad_w)

    return Tensor.make(out, (x, kernel), backward)


def conv1d_radial(x: Tensor, kernel: Tensor, stride: int = 1) -> Tensor:
    """
    Valid 1D convolution along the radial axis of a ``(B, C, Θ, R, Z)`` map.

    ``kernel`` has shape ``(C', C, k)`` and is applied independently at every
    (θ, z) site.
    """
    if x.ndim != 5:
        raise ShapeError(f"conv1d_radial expects (B, C, Θ, R, Z), got shape {x.shape}")
    kernel = as_tensor(kernel)
    if kernel.ndim != 3:
        raise ShapeError(f"radial kernel must be (C', C, k), got shape {kernel.shape}")
    out_c, in_c, k = kernel.shape
    return correlate(x, kernel.reshape(out_c, in_c, 1, k, 1), stride=(1, stride, 1))


def conv3d_cyl(x: Tensor, kernel: Tensor) -> Tensor:
    """
    3×3×3 convolution on a cylindrical map.

    θ is padded circularly and z by mirroring, so both keep their extent;
    the radial axis is unpadded and shrinks by two.
    """
    if x.ndim != 5:
        raise ShapeError(f"conv3d_cyl expects (B, C, Θ, R, Z), got shape {x.shape}")
    kernel = as_tensor(kernel)
    if kernel.shape[2:] != (3, 3, 3):
        raise ShapeError(f"conv3d_cyl kernel must be (C', C, 3, 3, 3), got {kernel.shape}")
    n_theta, n_r, n_z = x.shape[2:]
    if n_theta < 3:
        raise ShapeError(f"theta axis has extent {n_theta}; circular padding needs at least 3")
    if n_r < 3:
        raise ShapeError(f"radius axis has extent {n_r}, smaller than kernel size 3")
    if n_z < 1:
        raise ShapeError("z axis is empty")
    padded = pad_symmetric(pad_circular(x, axis=2, width=1), axis=4, width=1)
    return correlate(padded, kernel)


def conv1d(x: Tensor, kernel: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Zero-padded 1D convolution of a ``(B, C, L)`` signal."""
    if x.ndim != 3:
        raise ShapeError(f"conv1d expects (B, C, L), got shape {x.shape}")
    if padding:
        x = pad_zeros(x, axis=2, width=padding)
    return correlate(x, kernel, stride=stride)


# -- normalisation and pooling ---------------------------------------------------


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """
    Per-channel batch normalisation over every axis except axis 1.

    In training mode the batch statistics are used and ``running_mean`` /
    ``running_var`` are updated in place with ``momentum``. A batch holding a
    single value per channel is permitted; its variance is floored by ``eps``.
    """
    axes = (0,) + tuple(range(2, x.ndim))
    view = (1, -1) + (1,) * (x.ndim - 2)
    if training:
        count = x.data.size // x.shape[1]
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        unbiased = var * count / (count - 1) if count > 1 else var
        running_mean *= 1.0 - momentum
        running_mean += momentum * mean
        running_var *= 1.0 - momentum
        running_var += momentum * unbiased
    else:
        count = None
        mean, var = running_mean, running_var

    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x.data - mean.reshape(view)) * inv_std.reshape(view)
    out = x_hat * gamma.data.reshape(view) + beta.data.reshape(view)

    def backward(g):
        gamma.accumulate((g * x_hat).sum(axis=axes))
        beta.accumulate(g.sum(axis=axes))
        if not x.requires_grad:
            return
        g_hat = g * gamma.data.reshape(view)
        if training:
            sum_g = g_hat.sum(axis=axes, keepdims=True)
            sum_gx = (g_hat * x_hat).sum(axis=axes, keepdims=True)
            grad = (count * g_hat - sum_g - x_hat * sum_gx) * (inv_std.reshape(view) / count)
        else:
            grad = g_hat * inv_std.reshape(view)
        x.accumulate(grad)

    return Tensor.make(out, (x, gamma, beta), backward)


def maxpool1d(x: Tensor, kernel_size: int, stride: int, padding: int = 0) -> Tensor:
    """Max pooling along the last axis of a ``(B, C, L)`` signal; padding is -inf."""
    if x.ndim != 3:
        raise ShapeError(f"maxpool1d expects (B, C, L), got shape {x.shape}")
    padded = np.pad(x.data, ((0, 0), (0, 0), (padding, padding)), constant_values=-np.inf)
    if padded.shape[2] < kernel_size:
        raise ShapeError(
            f"length axis has extent {padded.shape[2]}, smaller than pool size {kernel_size}"
        )
    windows = sliding_window_view(padded, kernel_size, axis=2)[:, :, ::stride, :]
    arg = windows.argmax(axis=3)
    out = np.take_along_axis(windows, arg[..., None], axis=3)[..., 0]
    positions = arg + (np.arange(windows.shape[2]) * stride)[None, None, :]

    def backward(g):
        full = np.zeros_like(padded)
        b, c, _ = np.indices(positions.shape)
        np.add.at(full, (b, c, positions), g)
        x.accumulate(full[:, :, padding : padding + x.shape[2]])

    return Tensor.make(out, (x,), backward)


def global_maxpool(x: Tensor, axis: int = -1) -> Tensor:
    return x.max(axis=axis % x.ndim)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """``x @ weight.T + bias`` for ``x`` of shape ``(B, F)``."""
    out = x @ as_tensor(weight).transpose(1, 0)
    return out + bias if bias is not None else out
