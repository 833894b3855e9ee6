"""Minimal dense-tensor reverse-mode automatic differentiation.

Tensors wrap float64 numpy arrays (float32 is used only at the checkpoint
boundary). The graph is built eagerly; backward() runs a topological sweep
accumulating gradients into every reachable tensor with requires_grad.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import NotScalar, ShapeMismatch

_GELU_C = math.sqrt(2.0 / math.pi)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum out broadcasted axes so grad matches the original operand shape."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def scaled_dot_attention(q: "Tensor", k: "Tensor", v: "Tensor", scale: float) -> "Tensor":
    """softmax(q kᵀ · scale) v as one graph node.

    Works on matching 2-D (n, d_k) or batched (h, n, d_k) operands; the
    softmax runs over the key axis. Fusing the chain keeps the graph small
    on the training hot path.
    """
    kt = np.swapaxes(k.data, -1, -2)
    scores = (q.data @ kt) * scale
    e = np.exp(scores - scores.max(axis=-1, keepdims=True))
    attn = e / e.sum(axis=-1, keepdims=True)
    data = attn @ v.data

    def backward(g):
        gv = np.swapaxes(attn, -1, -2) @ g if v.requires_grad else None
        ga = g @ np.swapaxes(v.data, -1, -2)
        gs = (ga - (ga * attn).sum(axis=-1, keepdims=True)) * attn * scale
        gq = gs @ k.data if q.requires_grad else None
        gk = np.swapaxes(gs, -1, -2) @ q.data if k.requires_grad else None
        return (gq, gk, gv)

    return q._make(data, (q, k, v), backward)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, _parents=()):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = None

    # -- constructors --------------------------------------------------

    @staticmethod
    def param(data) -> "Tensor":
        return Tensor(data, requires_grad=True)

    @staticmethod
    def zeros(shape, requires_grad: bool = False) -> "Tensor":
        return Tensor(np.zeros(shape), requires_grad=requires_grad)

    # -- plumbing ------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def _make(self, data, parents, backward) -> "Tensor":
        requires = any(p.requires_grad for p in parents)
        out = Tensor(data, requires_grad=requires, _parents=tuple(parents) if requires else ())
        if requires:
            out._backward = backward
        return out

    # -- arithmetic ----------------------------------------------------

    @staticmethod
    def _coerce(other) -> "Tensor":
        return other if isinstance(other, Tensor) else Tensor(other)

    def __add__(self, other) -> "Tensor":
        other = self._coerce(other)
        data = self.data + other.data

        def backward(g):
            return (
                _unbroadcast(g, self.shape) if self.requires_grad else None,
                _unbroadcast(g, other.shape) if other.requires_grad else None,
            )

        return self._make(data, (self, other), backward)

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        return self._make(-self.data, (self,), lambda g: (-g,))

    def __sub__(self, other) -> "Tensor":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Tensor":
        return self._coerce(other) + (-self)

    def __mul__(self, other) -> "Tensor":
        other = self._coerce(other)
        data = self.data * other.data

        def backward(g):
            return (
                _unbroadcast(g * other.data, self.shape) if self.requires_grad else None,
                _unbroadcast(g * self.data, other.shape) if other.requires_grad else None,
            )

        return self._make(data, (self, other), backward)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        other = self._coerce(other)
        data = self.data / other.data

        def backward(g):
            return (
                _unbroadcast(g / other.data, self.shape),
                _unbroadcast(-g * self.data / (other.data ** 2), other.shape),
            )

        return self._make(data, (self, other), backward)

    def __pow__(self, exponent: float) -> "Tensor":
        data = self.data ** exponent

        def backward(g):
            return (g * exponent * self.data ** (exponent - 1),)

        return self._make(data, (self,), backward)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        other = self._coerce(other)
        if self.data.shape[-1] != other.data.shape[0 if other.ndim <= 2 else -2]:
            raise ShapeMismatch(f"matmul {self.shape} @ {other.shape}")
        data = self.data @ other.data

        def backward(g):
            a, b = self.data, other.data
            need_a, need_b = self.requires_grad, other.requires_grad
            if a.ndim == 1 and b.ndim == 1:
                return (g * b if need_a else None, g * a if need_b else None)
            if a.ndim == 1:
                return (g @ b.T if need_a else None,
                        np.outer(a, g) if need_b else None)
            if b.ndim == 1:
                return (np.outer(g, b) if need_a else None,
                        a.T @ g if need_b else None)
            ga = _unbroadcast(g @ np.swapaxes(b, -1, -2), a.shape) if need_a else None
            gb = _unbroadcast(np.swapaxes(a, -1, -2) @ g, b.shape) if need_b else None
            return (ga, gb)

        return self._make(data, (self, other), backward)

    # -- shape ops -----------------------------------------------------

    def reshape(self, *shape) -> "Tensor":
        orig = self.shape
        data = self.data.reshape(*shape)
        return self._make(data, (self,), lambda g: (g.reshape(orig),))

    @property
    def T(self) -> "Tensor":
        return self._make(self.data.T, (self,), lambda g: (g.T,))

    def transpose(self, *axes: int) -> "Tensor":
        inverse = np.argsort(axes)
        data = self.data.transpose(axes)
        return self._make(data, (self,), lambda g: (g.transpose(inverse),))

    def __getitem__(self, idx) -> "Tensor":
        data = self.data[idx]
        parts = idx if isinstance(idx, tuple) else (idx,)
        # Basic indexing selects disjoint positions, so a direct in-place add
        # suffices; fancy indexing may repeat positions and needs ufunc.at.
        basic = all(isinstance(p, (slice, int)) for p in parts)

        def backward(g):
            full = np.zeros_like(self.data)
            if basic:
                full[idx] += g
            else:
                np.add.at(full, idx, g)
            return (full,)

        return self._make(data, (self,), backward)

    @staticmethod
    def concat(tensors: list["Tensor"], axis: int = 0) -> "Tensor":
        datas = [t.data for t in tensors]
        data = np.concatenate(datas, axis=axis)
        sizes = [d.shape[axis] for d in datas]
        splits = np.cumsum(sizes)[:-1]

        requires = any(t.requires_grad for t in tensors)
        out = Tensor(data, requires_grad=requires, _parents=tuple(tensors) if requires else ())
        if requires:
            out._backward = lambda g: tuple(np.split(g, splits, axis=axis))
        return out

    @staticmethod
    def stack(tensors: list["Tensor"], axis: int = 0) -> "Tensor":
        expanded = [t.reshape(*t.shape[:axis], 1, *t.shape[axis:]) for t in tensors]
        return Tensor.concat(expanded, axis=axis)

    # -- reductions ----------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        data = self.data.sum(axis=axis, keepdims=keepdims)

        def backward(g):
            g = np.asarray(g)
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, self.shape),)

        return self._make(data, (self,), backward)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        n = self.data.size if axis is None else self.data.shape[axis]
        scale = 1.0 / n
        data = self.data.sum(axis=axis, keepdims=keepdims) * scale

        def backward(g):
            g = np.asarray(g) * scale
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, self.shape),)

        return self._make(data, (self,), backward)

    # -- elementwise nonlinearities ------------------------------------

    def exp(self) -> "Tensor":
        data = np.exp(self.data)
        return self._make(data, (self,), lambda g: (g * data,))

    def log(self) -> "Tensor":
        return self._make(np.log(self.data), (self,), lambda g: (g / self.data,))

    def tanh(self) -> "Tensor":
        data = np.tanh(self.data)
        return self._make(data, (self,), lambda g: (g * (1 - data ** 2),))

    def sigmoid(self) -> "Tensor":
        data = 1.0 / (1.0 + np.exp(-self.data))
        return self._make(data, (self,), lambda g: (g * data * (1 - data),))

    def relu(self) -> "Tensor":
        data = np.maximum(self.data, 0.0)
        return self._make(data, (self,), lambda g: (g * (self.data > 0),))

    def gelu(self) -> "Tensor":
        """Tanh-approximation GELU with its exact analytic derivative."""
        x = self.data
        x2 = x * x
        inner = _GELU_C * (x + 0.044715 * (x2 * x))
        t = np.tanh(inner)
        data = 0.5 * x * (1.0 + t)

        def backward(g):
            d_inner = _GELU_C * (1.0 + 3 * 0.044715 * x2)
            deriv = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner
            return (g * deriv,)

        return self._make(data, (self,), backward)

    # -- composites ----------------------------------------------------

    def softmax(self, axis: int = -1) -> "Tensor":
        # Max subtraction is a constant shift; softmax is invariant to it.
        e = np.exp(self.data - self.data.max(axis=axis, keepdims=True))
        data = e / e.sum(axis=axis, keepdims=True)

        def backward(g):
            dot = (g * data).sum(axis=axis, keepdims=True)
            return ((g - dot) * data,)

        return self._make(data, (self,), backward)

    def layer_norm(self, gamma: "Tensor", beta: "Tensor", eps: float = 1e-5) -> "Tensor":
        x = self.data
        n = x.shape[-1]
        inv_n = 1.0 / n
        mu = x.sum(axis=-1, keepdims=True) * inv_n
        centered = x - mu
        var = (centered * centered).sum(axis=-1, keepdims=True) * inv_n
        inv_denom = 1.0 / np.sqrt(var + eps)
        normed = centered * inv_denom
        data = normed * gamma.data + beta.data

        def backward(g):
            g_beta = _unbroadcast(g, gamma.shape) if beta.requires_grad else None
            g_gamma = _unbroadcast(g * normed, gamma.shape) if gamma.requires_grad else None
            if self.requires_grad:
                gn = g * gamma.data
                g_var = (gn * centered).sum(axis=-1, keepdims=True) * (-0.5) * inv_denom ** 3
                gc = gn * inv_denom + centered * (2.0 * inv_n) * g_var
                gx = gc - gc.sum(axis=-1, keepdims=True) * inv_n
            else:
                gx = None
            return (gx, g_gamma, g_beta)

        return self._make(data, (self, gamma, beta), backward)

    # -- backward ------------------------------------------------------

    def backward(self) -> None:
        """Populate .grad for every reachable requires_grad tensor."""
        if self.data.size != 1:
            raise NotScalar(f"backward() needs a scalar, got shape {self.shape}")

        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                # Constant leaves receive no gradient; keep them off the walk.
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))

        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is None or node.grad is None:
                continue
            grads = node._backward(node.grad)
            for parent, g in zip(node._parents, grads):
                if g is None or not parent.requires_grad:
                    continue
                if parent.grad is None:
                    # No defensive copy: gradients are never mutated in
                    # place, every accumulation allocates a fresh array.
                    parent.grad = np.asarray(g, dtype=np.float64)
                else:
                    parent.grad = parent.grad + g

    def zero_grad(self) -> None:
        self.grad = None
