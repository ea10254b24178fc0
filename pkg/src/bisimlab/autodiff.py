"""Minimal reverse-mode automatic differentiation over numpy arrays.

Just enough ops for MLP forward passes and squared-error losses: add/sub/mul
with broadcasting, matmul, relu, concat, mean. Gradients are accumulated by
walking the tape in reverse topological order.
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "_parents", "_backward", "requires_grad")

    def __init__(self, data, parents=(), backward=None, requires_grad: bool = True):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self._parents = parents
        self._backward = backward
        self.requires_grad = requires_grad

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def _coerce(self, other) -> "Tensor":
        return other if isinstance(other, Tensor) else Tensor(other, requires_grad=False)

    def __add__(self, other) -> "Tensor":
        other = self._coerce(other)
        out = Tensor(self.data + other.data, parents=(self, other))

        def backward(grad):
            return (_unbroadcast(grad, self.shape), _unbroadcast(grad, other.shape))

        out._backward = backward
        return out

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        out = Tensor(-self.data, parents=(self,))
        out._backward = lambda grad: (-grad,)
        return out

    def __sub__(self, other) -> "Tensor":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Tensor":
        return self._coerce(other) + (-self)

    def __mul__(self, other) -> "Tensor":
        other = self._coerce(other)
        out = Tensor(self.data * other.data, parents=(self, other))

        def backward(grad):
            return (
                _unbroadcast(grad * other.data, self.shape),
                _unbroadcast(grad * self.data, other.shape),
            )

        out._backward = backward
        return out

    __rmul__ = __mul__

    def __matmul__(self, other) -> "Tensor":
        other = self._coerce(other)
        out = Tensor(self.data @ other.data, parents=(self, other))

        def backward(grad):
            return (grad @ other.data.T, self.data.T @ grad)

        out._backward = backward
        return out

    def relu(self) -> "Tensor":
        out = Tensor(np.maximum(self.data, 0.0), parents=(self,))
        out._backward = lambda grad: (grad * (self.data > 0.0),)
        return out

    def square(self) -> "Tensor":
        return self * self

    def mean(self) -> "Tensor":
        out = Tensor(self.data.mean(), parents=(self,))
        out._backward = lambda grad: (np.full(self.shape, grad / self.data.size),)
        return out

    def sum(self) -> "Tensor":
        out = Tensor(self.data.sum(), parents=(self,))
        out._backward = lambda grad: (np.full(self.shape, grad),)
        return out

    def detach(self) -> "Tensor":
        """Gradient barrier: same values, no tape edge back to self."""
        return Tensor(self.data.copy(), requires_grad=False)

    def backward(self) -> None:
        """Accumulate gradients of a scalar output into every parent's .grad."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        order: list[Tensor] = []
        seen: set[int] = set()

        def visit(node: "Tensor") -> None:
            if id(node) in seen:
                return
            seen.add(id(node))
            for parent in node._parents:
                visit(parent)
            order.append(node)

        visit(self)
        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            grad = grads.pop(id(node), None)
            if grad is None:
                continue
            if node.requires_grad and not node._parents:
                node.grad = grad if node.grad is None else node.grad + grad
            if node._backward is None:
                continue
            for parent, pgrad in zip(node._parents, node._backward(grad)):
                key = id(parent)
                grads[key] = pgrad if key not in grads else grads[key] + pgrad


def concat(tensors: list[Tensor], axis: int = 1) -> Tensor:
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis), parents=tuple(tensors))
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(grad):
        return tuple(np.split(grad, splits, axis=axis))

    out._backward = backward
    return out


def mse(a: Tensor, b: Tensor) -> Tensor:
    return (a - b).square().mean()
