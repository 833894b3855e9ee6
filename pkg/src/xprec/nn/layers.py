"""Neural building blocks on top of the autodiff tensor: linear layers,
single-head attention primitives, multi-head transformer encoder blocks,
and the binary parameter checkpoint format."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import BadHeadCount, ShapeMismatch
from .tensor import _GELU_C, Tensor, scaled_dot_attention

CKPT_MAGIC = b"XPNN"
CKPT_VERSION = 1


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None) -> np.ndarray:
    a = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape if shape is not None else (fan_in, fan_out))


class Module:
    """Tiny parameter-registry base; children register named sub-tensors."""

    def named_params(self, prefix: str = "") -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for name, value in vars(self).items():
            key = f"{prefix}{name}" if not prefix else f"{prefix}.{name}"
            if isinstance(value, Tensor):
                out[key] = value
            elif isinstance(value, Module):
                out.update(value.named_params(key))
            elif isinstance(value, (list, tuple)):
                for i, v in enumerate(value):
                    if isinstance(v, Module):
                        out.update(v.named_params(f"{key}.{i}"))
                    elif isinstance(v, Tensor):
                        out[f"{key}.{i}"] = v
        return out

    def params(self) -> list[Tensor]:
        return list(self.named_params().values())


class Linear(Module):
    def __init__(self, rng: np.random.Generator, d_in: int, d_out: int, bias: bool = True):
        self.W = Tensor.param(glorot(rng, d_in, d_out))
        self.b = Tensor.param(np.zeros(d_out)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        if self.b is None:
            return x @ self.W
        if x.ndim != 2:
            return x @ self.W + self.b
        # Fused affine node: one graph node instead of matmul + add.
        W, b = self.W, self.b
        data = x.data @ W.data + b.data

        def backward(g):
            gx = g @ W.data.T if x.requires_grad else None
            gW = x.data.T @ g if W.requires_grad else None
            gb = g.sum(axis=0) if b.requires_grad else None
            return (gx, gW, gb)

        return x._make(data, (x, W, b), backward)

    def named_params(self, prefix: str = "") -> dict[str, Tensor]:
        out = {f"{prefix}.W" if prefix else "W": self.W}
        if self.b is not None:
            out[f"{prefix}.b" if prefix else "b"] = self.b
        return out


@dataclass
class AttentionParams:
    """Single-head projection triple with shared key dimension."""
    W_Q: Tensor
    W_K: Tensor
    W_V: Tensor

    @staticmethod
    def init(rng: np.random.Generator, d: int, d_k: int) -> "AttentionParams":
        return AttentionParams(
            W_Q=Tensor.param(glorot(rng, d, d_k)),
            W_K=Tensor.param(glorot(rng, d, d_k)),
            W_V=Tensor.param(glorot(rng, d, d_k)),
        )

    def named_params(self, prefix: str = "") -> dict[str, Tensor]:
        p = f"{prefix}." if prefix else ""
        return {f"{p}W_Q": self.W_Q, f"{p}W_K": self.W_K, f"{p}W_V": self.W_V}


def self_attention(X: Tensor, params: AttentionParams) -> Tensor:
    """Scaled dot-product self-attention over the rows of X (n x d -> n x d_k)."""
    if X.ndim != 2 or X.shape[1] != params.W_Q.shape[0]:
        raise ShapeMismatch(f"self_attention input {X.shape} vs W_Q {params.W_Q.shape}")
    d_k = params.W_Q.shape[1]
    q = X @ params.W_Q
    k = X @ params.W_K
    v = X @ params.W_V
    return scaled_dot_attention(q, k, v, 1.0 / math.sqrt(d_k))


def cross_attention(r: Tensor, context: Tensor, params: AttentionParams) -> Tensor:
    """Single query row attending over context rows (1 x d -> 1 x d_k)."""
    if r.ndim != 2 or r.shape[0] != 1:
        raise ShapeMismatch(f"cross_attention query must be 1 x d, got {r.shape}")
    if context.ndim != 2 or context.shape[1] != params.W_K.shape[0]:
        raise ShapeMismatch(f"context {context.shape} vs W_K {params.W_K.shape}")
    d_k = params.W_Q.shape[1]
    q = r @ params.W_Q
    k = context @ params.W_K
    v = context @ params.W_V
    return scaled_dot_attention(q, k, v, 1.0 / math.sqrt(d_k))


def _multi_head_mix(q2: Tensor, k2: Tensor, v2: Tensor, heads: int, scale: float) -> Tensor:
    """Per-head scaled-dot attention over (n, d) projections, heads merged
    back to (n, d). One graph node covering the split/attend/merge chain."""
    n, d = q2.shape
    dh = d // heads

    def split(a: np.ndarray) -> np.ndarray:
        return a.reshape(n, heads, dh).transpose(1, 0, 2)

    def merge(a: np.ndarray) -> np.ndarray:
        return a.transpose(1, 0, 2).reshape(n, d)

    q, k, v = split(q2.data), split(k2.data), split(v2.data)
    scores = (q @ k.transpose(0, 2, 1)) * scale
    e = np.exp(scores - scores.max(axis=-1, keepdims=True))
    attn = e / e.sum(axis=-1, keepdims=True)
    data = merge(attn @ v)

    def backward(g):
        gm = split(np.ascontiguousarray(g))
        gv = attn.transpose(0, 2, 1) @ gm if v2.requires_grad else None
        ga = gm @ v.transpose(0, 2, 1)
        gs = (ga - (ga * attn).sum(axis=-1, keepdims=True)) * attn * scale
        gq = gs @ k if q2.requires_grad else None
        gk = gs.transpose(0, 2, 1) @ q if k2.requires_grad else None
        return (merge(gq) if gq is not None else None,
                merge(gk) if gk is not None else None,
                merge(gv) if gv is not None else None)

    return q2._make(data, (q2, k2, v2), backward)


class MultiHeadSelfAttention(Module):
    def __init__(self, rng: np.random.Generator, d_model: int, heads: int):
        if d_model % heads != 0:
            raise BadHeadCount(f"d_model {d_model} not divisible by {heads} heads")
        self.heads = heads
        self.d_head = d_model // heads
        self.wq = Linear(rng, d_model, d_model, bias=False)
        self.wk = Linear(rng, d_model, d_model, bias=False)
        self.wv = Linear(rng, d_model, d_model, bias=False)
        self.wo = Linear(rng, d_model, d_model, bias=False)

    def __call__(self, X: Tensor) -> Tensor:
        mixed = _multi_head_mix(self.wq(X), self.wk(X), self.wv(X),
                                self.heads, 1.0 / math.sqrt(self.d_head))
        return self.wo(mixed)


class FeedForward(Module):
    def __init__(self, rng: np.random.Generator, d_model: int, hidden: int | None = None):
        hidden = hidden or 2 * d_model
        self.fc1 = Linear(rng, d_model, hidden)
        self.fc2 = Linear(rng, hidden, d_model)

    def __call__(self, x: Tensor) -> Tensor:
        if x.ndim != 2:
            return self.fc2(self.fc1(x).gelu())
        # Fused affine -> GELU -> affine node for the 2-D hot path.
        W1, b1, W2, b2 = self.fc1.W, self.fc1.b, self.fc2.W, self.fc2.b
        h = x.data @ W1.data + b1.data
        h2 = h * h
        t = np.tanh(_GELU_C * (h + 0.044715 * (h2 * h)))
        a = 0.5 * h * (1.0 + t)
        data = a @ W2.data + b2.data

        def backward(g):
            ga = g @ W2.data.T
            gW2 = a.T @ g if W2.requires_grad else None
            gb2 = g.sum(axis=0) if b2.requires_grad else None
            d_inner = _GELU_C * (1.0 + 3 * 0.044715 * h2)
            gh = ga * (0.5 * (1.0 + t) + 0.5 * h * (1.0 - t * t) * d_inner)
            gx = gh @ W1.data.T if x.requires_grad else None
            gW1 = x.data.T @ gh if W1.requires_grad else None
            gb1 = gh.sum(axis=0) if b1.requires_grad else None
            return (gx, gW1, gb1, gW2, gb2)

        return x._make(data, (x, W1, b1, W2, b2), backward)


class EncoderLayer(Module):
    """Post-norm block: MHSA + residual + LN, then FF + residual + LN."""

    def __init__(self, rng: np.random.Generator, d_model: int, heads: int):
        self.attn = MultiHeadSelfAttention(rng, d_model, heads)
        self.ff = FeedForward(rng, d_model)
        self.ln1_g = Tensor.param(np.ones(d_model))
        self.ln1_b = Tensor.param(np.zeros(d_model))
        self.ln2_g = Tensor.param(np.ones(d_model))
        self.ln2_b = Tensor.param(np.zeros(d_model))

    def __call__(self, X: Tensor) -> Tensor:
        X = (X + self.attn(X)).layer_norm(self.ln1_g, self.ln1_b)
        return (X + self.ff(X)).layer_norm(self.ln2_g, self.ln2_b)


class TransformerEncoder(Module):
    """Stack of encoder layers; permutation-equivariant (no positions)."""

    def __init__(self, rng: np.random.Generator, d_model: int, layers: int, heads: int):
        if layers < 0:
            raise ValueError("layers must be >= 0")
        self.layers = [EncoderLayer(rng, d_model, heads) for _ in range(layers)]

    def __call__(self, X: Tensor) -> Tensor:
        if X.ndim != 2:
            raise ShapeMismatch(f"encoder expects n x d_model, got {X.shape}")
        for layer in self.layers:
            X = layer(X)
        return X


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def save_checkpoint(params: dict[str, Tensor | np.ndarray], path: str) -> None:
    """Named-tensor table; values stored as little-endian f32."""
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<II", CKPT_VERSION, len(params)))
        for name in sorted(params):
            value = params[name]
            arr = value.data if isinstance(value, Tensor) else np.asarray(value)
            raw_name = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw_name)))
            fh.write(raw_name)
            fh.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(arr.astype("<f4").tobytes())


def load_checkpoint(path: str) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        if fh.read(4) != CKPT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        version, count = struct.unpack("<II", fh.read(8))
        if version != CKPT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        out: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = tuple(struct.unpack("<I", fh.read(4))[0] for _ in range(ndim))
            size = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(4 * size), dtype="<f4").reshape(shape)
            out[name] = data.astype(np.float64)
    return out
