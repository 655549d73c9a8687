"""Reverse-mode automatic differentiation over numpy arrays.

A ``Tensor`` wraps an ndarray and records the op that produced it; calling
``backward()`` on a scalar walks the tape in reverse topological order and
accumulates gradients into every reachable tensor with ``requires_grad``.
The op set is deliberately small: elementwise arithmetic, matmul,
reductions, shape ops, the activations used by the models, and the
convolution/resampling ops backed by the kernel backends.

Gradients are exact (no approximations); every op here is covered by a
central finite-difference check in the test suite.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np

from . import backend

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable tape recording inside the block (inference fast path)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce ``grad`` back to ``shape`` by summing broadcast axes."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_grad_fn")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._grad_fn: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None

    # ------------------------------------------------------------------
    # bookkeeping
    # ------------------------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad})"

    def backward(self, grad: np.ndarray | None = None) -> None:
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed needs a scalar tensor")
            grad = np.ones_like(self.data)
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen and (p.requires_grad or p._parents):
                    stack.append((p, False))
        self.grad = grad if self.grad is None else self.grad + grad
        for node in reversed(topo):
            if node._grad_fn is None or node.grad is None:
                continue
            grads = node._grad_fn(node.grad)
            for parent, g in zip(node._parents, grads):
                if g is None or not (parent.requires_grad or parent._parents):
                    continue
                parent.grad = g if parent.grad is None else parent.grad + g

    # ------------------------------------------------------------------
    # operator sugar
    # ------------------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 or isinstance(shape[0], int) else shape[0])

    def transpose(self, *axes):
        return transpose(self, axes or None)


class Parameter(Tensor):
    __slots__ = ()

    def __init__(self, data):
        super().__init__(np.asarray(data), requires_grad=True)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x))


def _make(data: np.ndarray, parents: tuple[Tensor, ...], grad_fn) -> Tensor:
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad or p._parents for p in parents):
        out.requires_grad = any(p.requires_grad for p in parents)
        out._parents = parents
        out._grad_fn = grad_fn
    return out


# ----------------------------------------------------------------------
# elementwise arithmetic
# ----------------------------------------------------------------------
# Python scalars stay raw so numpy's weak-scalar promotion keeps float32
# graphs in float32.
def add(a, b) -> Tensor:
    if isinstance(b, (int, float)):
        a = _as_tensor(a)
        return _make(a.data + b, (a,), lambda g: (g,))
    if isinstance(a, (int, float)):
        return add(b, a)
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data + b.data

    def grad_fn(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _make(data, (a, b), grad_fn)


def sub(a, b) -> Tensor:
    if isinstance(b, (int, float)):
        a = _as_tensor(a)
        return _make(a.data - b, (a,), lambda g: (g,))
    if isinstance(a, (int, float)):
        b = _as_tensor(b)
        return _make(a - b.data, (b,), lambda g: (-g,))
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data - b.data

    def grad_fn(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)

    return _make(data, (a, b), grad_fn)


def mul(a, b) -> Tensor:
    if isinstance(b, (int, float)):
        a = _as_tensor(a)
        return _make(a.data * b, (a,), lambda g: (g * b,))
    if isinstance(a, (int, float)):
        return mul(b, a)
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data * b.data

    def grad_fn(g):
        return (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        )

    return _make(data, (a, b), grad_fn)


def div(a, b) -> Tensor:
    if isinstance(b, (int, float)):
        return mul(a, 1.0 / b)
    if isinstance(a, (int, float)):
        b = _as_tensor(b)
        return _make(a / b.data, (b,), lambda g: (-g * a / (b.data * b.data),))
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data / b.data

    def grad_fn(g):
        return (
            _unbroadcast(g / b.data, a.data.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape),
        )

    return _make(data, (a, b), grad_fn)


def power(a, p: float) -> Tensor:
    a = _as_tensor(a)
    data = a.data ** p

    def grad_fn(g):
        return (g * p * a.data ** (p - 1),)

    return _make(data, (a,), grad_fn)


def exp(a) -> Tensor:
    a = _as_tensor(a)
    data = np.exp(a.data)

    def grad_fn(g):
        return (g * data,)

    return _make(data, (a,), grad_fn)


def log(a) -> Tensor:
    a = _as_tensor(a)
    data = np.log(a.data)

    def grad_fn(g):
        return (g / a.data,)

    return _make(data, (a,), grad_fn)


def sqrt(a) -> Tensor:
    a = _as_tensor(a)
    data = np.sqrt(a.data)

    def grad_fn(g):
        return (g * (0.5 / data),)

    return _make(data, (a,), grad_fn)


def absolute(a) -> Tensor:
    a = _as_tensor(a)
    data = np.abs(a.data)

    def grad_fn(g):
        return (g * np.sign(a.data),)

    return _make(data, (a,), grad_fn)


def clip(a, lo: float, hi: float) -> Tensor:
    a = _as_tensor(a)
    data = np.clip(a.data, lo, hi)

    def grad_fn(g):
        inside = (a.data > lo) & (a.data < hi)
        return (g * inside.astype(g.dtype),)

    return _make(data, (a,), grad_fn)


# ----------------------------------------------------------------------
# activations
# ----------------------------------------------------------------------
def tanh(a) -> Tensor:
    a = _as_tensor(a)
    data = np.tanh(a.data)

    def grad_fn(g):
        return (g * (1.0 - data * data),)

    return _make(data, (a,), grad_fn)


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    x = a.data
    data = np.empty_like(x)
    pos = x >= 0
    data[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    data[~pos] = ex / (1.0 + ex)

    def grad_fn(g):
        return (g * data * (1.0 - data),)

    return _make(data, (a,), grad_fn)


def leaky_relu(a, slope: float = 0.2) -> Tensor:
    a = _as_tensor(a)
    mask = a.data > 0
    data = np.where(mask, a.data, slope * a.data)

    def grad_fn(g):
        return (g * np.where(mask, 1.0, slope).astype(g.dtype),)

    return _make(data, (a,), grad_fn)


def relu(a) -> Tensor:
    return leaky_relu(a, 0.0)


# ----------------------------------------------------------------------
# linear algebra, reductions, shape ops
# ----------------------------------------------------------------------
def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    data = np.matmul(a.data, b.data)

    def grad_fn(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.data.shape), _unbroadcast(gb, b.data.shape)

    return _make(data, (a, b), grad_fn)


def tsum(a, axis=None, keepdims=False) -> Tensor:
    a = _as_tensor(a)
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def grad_fn(g):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape).copy(),)
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.data.shape).copy(),)

    return _make(data, (a,), grad_fn)


def tmean(a, axis=None, keepdims=False) -> Tensor:
    a = _as_tensor(a)
    count = a.data.size if axis is None else np.prod(
        [a.data.shape[ax] for ax in (axis if isinstance(axis, tuple) else (axis,))]
    )
    s = tsum(a, axis=axis, keepdims=keepdims)
    return mul(s, 1.0 / float(count))


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    data = a.data.reshape(shape)

    def grad_fn(g):
        return (g.reshape(a.data.shape),)

    return _make(data, (a,), grad_fn)


def transpose(a, axes=None) -> Tensor:
    a = _as_tensor(a)
    data = a.data.transpose(axes)

    def grad_fn(g):
        inv = None if axes is None else tuple(np.argsort(axes))
        return (g.transpose(inv),)

    return _make(data, (a,), grad_fn)


def getitem(a, idx) -> Tensor:
    a = _as_tensor(a)
    data = a.data[idx]

    def grad_fn(g):
        full = np.zeros_like(a.data)
        full[idx] = g
        return (full,)

    return _make(data, (a,), grad_fn)


def concat(tensors: Iterable[Tensor], axis: int = 0) -> Tensor:
    ts = [_as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in ts], axis=axis)
    sizes = [t.data.shape[axis] for t in ts]
    splits = np.cumsum(sizes)[:-1]

    def grad_fn(g):
        return tuple(np.ascontiguousarray(p) for p in np.split(g, splits, axis=axis))

    return _make(data, tuple(ts), grad_fn)


# ----------------------------------------------------------------------
# convolution and resampling (backend kernels)
# ----------------------------------------------------------------------
def conv2d(x, w, b) -> Tensor:
    """Stride-1, same-padding 2-D convolution over NCHW tensors."""
    x, w, b = _as_tensor(x), _as_tensor(w), _as_tensor(b)
    k = w.data.shape[2]
    if k % 2 != 1 or w.data.shape[2] != w.data.shape[3]:
        raise ValueError("conv2d expects odd square kernels")
    data = backend.conv2d_fwd(x.data, w.data, b.data)

    def grad_fn(g):
        g = np.ascontiguousarray(g)
        gx = backend.conv2d_dx(g, w.data) if (x.requires_grad or x._parents) else None
        gw = backend.conv2d_dw(x.data, g, k) if (w.requires_grad or w._parents) else None
        gb = g.sum(axis=(0, 2, 3)) if (b.requires_grad or b._parents) else None
        return gx, gw, gb

    return _make(data, (x, w, b), grad_fn)


def upsample2x(x) -> Tensor:
    """Nearest-neighbour 2x upsampling of NCHW tensors."""
    x = _as_tensor(x)
    data = np.repeat(np.repeat(x.data, 2, axis=2), 2, axis=3)

    def grad_fn(g):
        n, c, h2, w2 = g.shape
        return (g.reshape(n, c, h2 // 2, 2, w2 // 2, 2).sum(axis=(3, 5)),)

    return _make(data, (x,), grad_fn)


def avgpool2x(x) -> Tensor:
    """2x2 average pooling of NCHW tensors (even spatial dims required)."""
    x = _as_tensor(x)
    n, c, h, w = x.data.shape
    data = x.data.reshape(n, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))

    def grad_fn(g):
        return (np.repeat(np.repeat(g, 2, axis=2), 2, axis=3) * 0.25,)

    return _make(data, (x,), grad_fn)
