"""
Reverse-mode automatic differentiation over numpy float64 arrays.

Every operation returns a new ``Tensor``; the array inside is never mutated
after construction. When at least one input requires a gradient the result
remembers its parents together with a closure that pushes the incoming
gradient back to them. ``Tensor.backward`` walks that graph once in reverse
topological order.
"""

from __future__ import annotations

import contextlib
import contextvars
import logging
from typing import Iterator, Sequence

import numpy as np

from tubemesh.errors import GradientError, ShapeError

log = logging.getLogger(__name__)

# Scoped to the current thread or task.
_grad_enabled: contextvars.ContextVar[bool] = contextvars.ContextVar("grad_enabled", default=True)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the block (inference)."""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def is_grad_enabled() -> bool:
    return _grad_enabled.get()


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_consumed")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.array(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None
        self._consumed = False

    # -- graph plumbing -------------------------------------------------

    @staticmethod
    def make(data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
        """Wrap ``data`` as the result of an operation on ``parents``."""
        needs_grad = _grad_enabled.get() and any(p.requires_grad for p in parents)
        out = Tensor(data, requires_grad=needs_grad)
        if needs_grad:
            out._parents = tuple(parents)
            out._backward = backward
        return out

    def accumulate(self, grad: np.ndarray) -> None:
        if not self.requires_grad:
            return
        if grad.shape != self.data.shape:
            raise ShapeError(
                f"gradient shape {grad.shape} does not match value shape {self.data.shape}"
            )
        if self.grad is None:
            self.grad = np.array(grad, dtype=np.float64)
        else:
            self.grad = self.grad + grad

    def _topological_order(self) -> list[Tensor]:
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        return order

    def backward(self, grad: np.ndarray | None = None) -> None:
        """
        Populate ``.grad`` of every tensor reachable from this one.

        Raises
        ------
        GradientError
            If the graph was already consumed by an earlier call, if the loss
            is not finite or if any leaf gradient ends up non-finite.
        ShapeError
            If no seed gradient is given for a non-scalar tensor.
        """
        if self._consumed:
            raise GradientError(
                "backward() was already called on this graph; reset gradients and recompute the loss"
            )
        if grad is None:
            if self.data.size != 1:
                raise ShapeError(
                    f"backward() needs a scalar loss, got shape {self.data.shape}"
                )
            if not np.isfinite(self.data).all():
                raise GradientError(f"loss is not finite: {float(self.data.ravel()[0])}")
            grad = np.ones_like(self.data)

        order = self._topological_order()
        self.accumulate(np.asarray(grad, dtype=np.float64))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

        leaves = [node for node in order if not node._parents and node.requires_grad]
        for node in order:
            node._backward = None
            node._parents = ()
        self._consumed = True

        for leaf in leaves:
            if leaf.grad is not None and not np.isfinite(leaf.grad).all():
                name = getattr(leaf, "name", None) or f"tensor{leaf.shape}"
                raise GradientError(f"non-finite gradient in '{name}'")

    # -- conveniences ---------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        return float(self.data.reshape(()))

    def detach(self) -> Tensor:
        return Tensor(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # -- elementwise arithmetic ------------------------------------------

    def __add__(self, other) -> Tensor:
        other = as_tensor(other)

        def backward(g):
            self.accumulate(_unbroadcast(g, self.shape))
            other.accumulate(_unbroadcast(g, other.shape))

        return Tensor.make(self.data + other.data, (self, other), backward)

    __radd__ = __add__

    def __neg__(self) -> Tensor:
        return Tensor.make(-self.data, (self,), lambda g: self.accumulate(-g))

    def __sub__(self, other) -> Tensor:
        return self + (-as_tensor(other))

    def __rsub__(self, other) -> Tensor:
        return as_tensor(other) + (-self)

    def __mul__(self, other) -> Tensor:
        other = as_tensor(other)

        def backward(g):
            self.accumulate(_unbroadcast(g * other.data, self.shape))
            other.accumulate(_unbroadcast(g * self.data, other.shape))

        return Tensor.make(self.data * other.data, (self, other), backward)

    __rmul__ = __mul__

    def __truediv__(self, other) -> Tensor:
        other = as_tensor(other)

        def backward(g):
            self.accumulate(_unbroadcast(g / other.data, self.shape))
            other.accumulate(
                _unbroadcast(-g * self.data / (other.data * other.data), other.shape)
            )

        return Tensor.make(self.data / other.data, (self, other), backward)

    def __pow__(self, exponent: float) -> Tensor:
        def backward(g):
            self.accumulate(g * exponent * self.data ** (exponent - 1))

        return Tensor.make(self.data**exponent, (self,), backward)

    def __matmul__(self, other) -> Tensor:
        other = as_tensor(other)
        if self.ndim != 2 or other.ndim != 2 or self.shape[1] != other.shape[0]:
            raise ShapeError(f"matmul expects (n,k)@(k,m), got {self.shape}@{other.shape}")

        def backward(g):
            self.accumulate(g @ other.data.T)
            other.accumulate(self.data.T @ g)

        return Tensor.make(self.data @ other.data, (self, other), backward)

    def exp(self) -> Tensor:
        out = np.exp(self.data)
        return Tensor.make(out, (self,), lambda g: self.accumulate(g * out))

    def log(self) -> Tensor:
        return Tensor.make(
            np.log(self.data), (self,), lambda g: self.accumulate(g / self.data)
        )

    def abs(self) -> Tensor:
        return Tensor.make(
            np.abs(self.data), (self,), lambda g: self.accumulate(g * np.sign(self.data))
        )

    def clip(self, low: float | None = None, high: float | None = None) -> Tensor:
        out = np.clip(self.data, low, high)
        inside = np.ones_like(self.data, dtype=bool)
        if low is not None:
            inside &= self.data >= low
        if high is not None:
            inside &= self.data <= high
        return Tensor.make(out, (self,), lambda g: self.accumulate(g * inside))

    # -- reductions and reshaping -----------------------------------------

    def sum(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        def backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self.accumulate(np.broadcast_to(g, self.shape))

        return Tensor.make(self.data.sum(axis=axis, keepdims=keepdims), (self,), backward)

    def mean(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        count = self.data.size if axis is None else int(
            np.prod([self.shape[a] for a in np.atleast_1d(axis)])
        )
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def max(self, axis: int) -> Tensor:
        """Maximum along one axis; the gradient goes to the first maximal entry."""
        index = np.expand_dims(self.data.argmax(axis=axis), axis)
        out = np.take_along_axis(self.data, index, axis=axis).squeeze(axis)

        def backward(g):
            full = np.zeros_like(self.data)
            np.put_along_axis(full, index, np.expand_dims(g, axis), axis=axis)
            self.accumulate(full)

        return Tensor.make(out, (self,), backward)

    def reshape(self, *shape) -> Tensor:
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return Tensor.make(
            self.data.reshape(shape), (self,), lambda g: self.accumulate(g.reshape(self.shape))
        )

    def transpose(self, *axes) -> Tensor:
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        inverse = np.argsort(axes)
        return Tensor.make(
            self.data.transpose(axes), (self,), lambda g: self.accumulate(g.transpose(inverse))
        )

    def take(self, indices: np.ndarray, axis: int) -> Tensor:
        """Gather along ``axis``; repeated indices accumulate their gradients."""
        indices = np.asarray(indices, dtype=np.intp)

        def backward(g):
            full = np.zeros_like(self.data)
            np.add.at(np.moveaxis(full, axis, 0), indices, np.moveaxis(g, axis, 0))
            self.accumulate(full)

        return Tensor.make(np.take(self.data, indices, axis=axis), (self,), backward)

    def __getitem__(self, index) -> Tensor:
        def backward(g):
            full = np.zeros_like(self.data)
            np.add.at(full, index, g)
            self.accumulate(full)

        return Tensor.make(self.data[index], (self,), backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]

    def backward(g):
        for i, t in enumerate(tensors):
            t.accumulate(np.take(g, i, axis=axis))

    return Tensor.make(np.stack([t.data for t in tensors], axis=axis), tensors, backward)


def concatenate(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def backward(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            t.accumulate(np.take(g, np.arange(lo, hi), axis=axis))

    return Tensor.make(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


class Parameter(Tensor):
    """
    A trainable leaf tensor.

    ``m`` and ``v`` hold the AdamW first and second moments; both start at
    zero and always match the value's shape.
    """

    __slots__ = ("name", "m", "v")

    def __init__(self, data, name: str = ""):
        super().__init__(data, requires_grad=True)
        self.name = name
        self.m = np.zeros_like(self.data)
        self.v = np.zeros_like(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def assign(self, value: np.ndarray) -> None:
        value = np.asarray(value, dtype=np.float64)
        if value.shape != self.data.shape:
            raise ShapeError(
                f"parameter '{self.name}' expects shape {self.data.shape}, got {value.shape}"
            )
        self.data = value.copy()

    def __repr__(self) -> str:
        return f"Parameter(name={self.name!r}, shape={self.shape})"
