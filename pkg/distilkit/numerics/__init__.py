"""Tensor arithmetic, neural primitives and reverse-mode differentiation."""

from __future__ import annotations

from .ops import (
    ActivationKind,
    LossKind,
    activation,
    binary_cross_entropy,
    binary_cross_entropy_with_logits,
    compute_loss,
    cosine_similarity,
    cross_entropy,
    dropout,
    embedding,
    gelu,
    layer_norm,
    leaky_relu,
    log_softmax_with_temperature,
    matmul,
    mse,
    sigmoid,
    softmax_np,
    softmax_with_temperature,
    tanh,
)
from .optim import AdamW, LinearSchedule, clip_grad_norm
from .serialize import read_tensor, write_tensor
from .tensor import ComputationTape, Tensor, backward, current_tape, no_grad

__all__ = [
    "ActivationKind",
    "AdamW",
    "ComputationTape",
    "LinearSchedule",
    "LossKind",
    "Tensor",
    "activation",
    "backward",
    "binary_cross_entropy",
    "binary_cross_entropy_with_logits",
    "clip_grad_norm",
    "compute_loss",
    "cosine_similarity",
    "cross_entropy",
    "current_tape",
    "dropout",
    "embedding",
    "gelu",
    "layer_norm",
    "leaky_relu",
    "log_softmax_with_temperature",
    "matmul",
    "mse",
    "no_grad",
    "read_tensor",
    "sigmoid",
    "softmax_np",
    "softmax_with_temperature",
    "tanh",
    "write_tensor",
]
