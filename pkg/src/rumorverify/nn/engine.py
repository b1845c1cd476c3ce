"""Minimal reverse-mode autodiff over float64 numpy arrays.

Covers exactly the operations the model needs: matmul, broadcast add/mul,
concat/stack/slice, ReLU, log, power, clamp, layer norm, softmax, dropout.
Graphs are built dynamically; calling backward() on a scalar output
accumulates gradients into every reachable node's `.grad`.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericsError


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape`, inverting numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A node in the computation graph wrapping a float64 ndarray."""

    __slots__ = ("data", "grad", "_parents", "_backward")

    def __init__(self, data, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def _accum(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64)
        else:
            self.grad = self.grad + g

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Reverse-mode pass from a scalar output."""
        if self.data.shape != ():
            raise NumericsError("backward() requires a scalar output")
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        self._accum(np.ones(()))
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other):
        other = as_tensor(other)
        out = Tensor(self.data + other.data, (self, other))

        def _bw(g):
            self._accum(_unbroadcast(g, self.data.shape))
            other._accum(_unbroadcast(g, other.data.shape))

        out._backward = _bw
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Tensor(-self.data, (self,))
        out._backward = lambda g: self._accum(-g)
        return out

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __mul__(self, other):
        other = as_tensor(other)
        out = Tensor(self.data * other.data, (self, other))

        def _bw(g):
            self._accum(_unbroadcast(g * other.data, self.data.shape))
            other._accum(_unbroadcast(g * self.data, other.data.shape))

        out._backward = _bw
        return out

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if isinstance(scalar, Tensor):
            raise TypeError("division only supported by python scalars")
        c = float(scalar)
        out = Tensor(self.data / c, (self,))
        out._backward = lambda g: self._accum(g / c)
        return out

    def __pow__(self, exponent):
        c = float(exponent)
        out = Tensor(self.data ** c, (self,))

        def _bw(g):
            if c == 0.0:
                return
            self._accum(g * c * self.data ** (c - 1.0))

        out._backward = _bw
        return out

    def __matmul__(self, other):
        other = as_tensor(other)
        a, b = self.data, other.data
        out = Tensor(a @ b, (self, other))

        def _bw(g):
            if a.ndim == 1 and b.ndim == 2:
                self._accum(b @ g)
                other._accum(np.outer(a, g))
            elif a.ndim == 2 and b.ndim == 2:
                self._accum(g @ b.T)
                other._accum(a.T @ g)
            elif a.ndim == 2 and b.ndim == 1:
                self._accum(np.outer(g, b))
                other._accum(a.T @ g)
            elif a.ndim == 1 and b.ndim == 1:
                self._accum(g * b)
                other._accum(g * a)
            else:  # pragma: no cover - no op in the model hits this
                raise NumericsError(f"unsupported matmul shapes {a.shape} @ {b.shape}")

        out._backward = _bw
        return out

    def __getitem__(self, index):
        out = Tensor(self.data[index], (self,))

        def _bw(g):
            full = np.zeros_like(self.data)
            full[index] = g
            self._accum(full)

        out._backward = _bw
        return out

    @property
    def T(self):
        out = Tensor(self.data.T, (self,))
        out._backward = lambda g: self._accum(g.T)
        return out


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def zeros(shape) -> Tensor:
    return Tensor(np.zeros(shape, dtype=np.float64))


def add_n(tensors: list[Tensor]) -> Tensor:
    """Sum tensors accumulating in input order (reproducible rounding)."""
    if not tensors:
        raise ValueError("add_n requires at least one tensor")
    acc = tensors[0].data
    for t in tensors[1:]:
        acc = acc + t.data
    out = Tensor(acc, tuple(tensors))

    def _bw(g):
        for t in tensors:
            t._accum(g)

    out._backward = _bw
    return out


def concat(tensors: list[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors))

    def _bw(g):
        offset = 0
        for t, size in zip(tensors, sizes):
            index = [slice(None)] * g.ndim
            index[axis] = slice(offset, offset + size)
            t._accum(g[tuple(index)])
            offset += size

    out._backward = _bw
    return out


def stack(tensors: list[Tensor]) -> Tensor:
    """Stack 1-D tensors into a matrix of rows."""
    tensors = [as_tensor(t) for t in tensors]
    out = Tensor(np.stack([t.data for t in tensors]), tuple(tensors))

    def _bw(g):
        for i, t in enumerate(tensors):
            t._accum(g[i])

    out._backward = _bw
    return out


def relu(x: Tensor) -> Tensor:
    out = Tensor(np.maximum(x.data, 0.0), (x,))
    out._backward = lambda g: x._accum(g * (x.data > 0.0))
    return out


def log(x: Tensor) -> Tensor:
    out = Tensor(np.log(x.data), (x,))
    out._backward = lambda g: x._accum(g / x.data)
    return out


def clip_min(x: Tensor, floor: float) -> Tensor:
    """Elementwise maximum(x, floor); gradient passes only where x > floor."""
    out = Tensor(np.maximum(x.data, floor), (x,))
    out._backward = lambda g: x._accum(g * (x.data > floor))
    return out


def tsum(x: Tensor) -> Tensor:
    out = Tensor(x.data.sum(), (x,))
    out._backward = lambda g: x._accum(np.broadcast_to(g, x.data.shape).copy())
    return out


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then scale and shift."""
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered ** 2).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out = Tensor(gain.data * xhat + bias.data, (x, gain, bias))
    n = x.data.shape[-1]

    def _bw(g):
        gain._accum(_unbroadcast(g * xhat, gain.data.shape))
        bias._accum(_unbroadcast(g, bias.data.shape))
        dxhat = g * gain.data
        dx = inv * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True) / n
        )
        x._accum(dx)

    out._backward = _bw
    return out


def softmax(x: Tensor) -> Tensor:
    """Softmax over the last axis, computed with max subtraction."""
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(y, (x,))

    def _bw(g):
        x._accum(y * (g - (g * y).sum(axis=-1, keepdims=True)))

    out._backward = _bw
    return out


def dropout(x: Tensor, p: float, rng: np.random.Generator | None, train: bool) -> Tensor:
    """Inverted dropout: in train mode survivors are scaled by 1/(1-p).

    Eval mode is a no-op and consumes no randomness.  The mask recipe is
    `rng.random(x.shape) >= p`, drawn once per call in forward order.
    """
    if not train or p == 0.0:
        return x
    if rng is None:
        raise NumericsError("dropout in train mode requires an RNG")
    if not 0.0 <= p < 1.0:
        raise NumericsError(f"dropout probability must be in [0, 1), got {p}")
    mask = (rng.random(x.data.shape) >= p) / (1.0 - p)
    out = Tensor(x.data * mask, (x,))
    out._backward = lambda g: x._accum(g * mask)
    return out


def check_finite(x: Tensor, context: str) -> Tensor:
    if not np.all(np.isfinite(x.data)):
        raise NumericsError(f"non-finite values in {context}")
    return x
