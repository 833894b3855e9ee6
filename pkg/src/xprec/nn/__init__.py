from .tensor import Tensor, scaled_dot_attention
from .layers import (
    AttentionParams,
    EncoderLayer,
    FeedForward,
    Linear,
    Module,
    MultiHeadSelfAttention,
    TransformerEncoder,
    cross_attention,
    glorot,
    load_checkpoint,
    save_checkpoint,
    self_attention,
)

__all__ = [
    "Tensor",
    "scaled_dot_attention",
    "AttentionParams",
    "EncoderLayer",
    "FeedForward",
    "Linear",
    "Module",
    "MultiHeadSelfAttention",
    "TransformerEncoder",
    "cross_attention",
    "glorot",
    "load_checkpoint",
    "save_checkpoint",
    "self_attention",
]
