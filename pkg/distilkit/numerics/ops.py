"""Differentiable primitives: arithmetic, matmul, activations, softmax and losses.

Every primitive computes its forward value with numpy and registers a local
derivative closure on the tape via :func:`make_result`.
"""

from __future__ import annotations

import math
from enum import StrEnum

import numpy as np
from scipy.special import erf, expit

from ..errors import ConfigError, DimensionError, DomainError
from .tensor import Tensor, as_tensor, make_result

LEAKY_RELU_SLOPE = 0.01
_SQRT_2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class ActivationKind(StrEnum):
    GELU = "gelu"
    LEAKY_RELU = "leaky_relu"
    SIGMOID = "sigmoid"
    TANH = "tanh"


class LossKind(StrEnum):
    CROSS_ENTROPY = "cross_entropy"
    BINARY_CROSS_ENTROPY = "binary_cross_entropy"
    MSE = "mse"


# ---------------------------------------------------------------------------
# Elementwise arithmetic
# ---------------------------------------------------------------------------


def add(a: object, b: object) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return make_result(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: object, b: object) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return make_result(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a: object, b: object) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return make_result(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def div(a: object, b: object) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data / b.data
    return make_result(out, (a, b), lambda g: (g / b.data, -g * out / b.data))


def power(x: Tensor, exponent: float) -> Tensor:
    return make_result(
        x.data**exponent,
        (x,),
        lambda g: (g * exponent * x.data ** (exponent - 1),),
    )


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)
    return make_result(out, (x,), lambda g: (g * out,))


def log(x: Tensor) -> Tensor:
    return make_result(np.log(x.data), (x,), lambda g: (g / x.data,))


def sqrt(x: Tensor) -> Tensor:
    out = np.sqrt(x.data)
    return make_result(out, (x,), lambda g: (g * 0.5 / out,))


# ---------------------------------------------------------------------------
# Shape and reduction
# ---------------------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes; leading axes broadcast."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul: cannot multiply shapes {a.shape} and {b.shape}")

    def _backward(g: np.ndarray):
        grad_a = np.matmul(g, np.swapaxes(b.data, -1, -2))
        grad_b = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return grad_a, grad_b

    return make_result(np.matmul(a.data, b.data), (a, b), _backward)


def reduce_sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    def _backward(g: np.ndarray):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape),)

    return make_result(x.data.sum(axis=axis, keepdims=keepdims), (x,), _backward)


def reduce_mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = x.size if axis is None else int(np.prod([x.shape[a] for a in np.atleast_1d(axis)]))
    return reduce_sum(x, axis=axis, keepdims=keepdims) * (1.0 / count)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    return make_result(x.data.reshape(shape), (x,), lambda g: (g.reshape(x.shape),))


def transpose(x: Tensor, axes: tuple[int, ...] | None = None) -> Tensor:
    if axes is None:
        axes = tuple(reversed(range(x.ndim)))
    inverse = tuple(np.argsort(axes))
    return make_result(np.transpose(x.data, axes), (x,), lambda g: (np.transpose(g, inverse),))


def getitem(x: Tensor, index: object) -> Tensor:
    def _backward(g: np.ndarray):
        full = np.zeros_like(x.data)
        np.add.at(full, index, g)
        return (full,)

    return make_result(x.data[index], (x,), _backward)


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Gather rows of *table*; repeated ids accumulate their gradients."""
    ids = np.asarray(ids, dtype=np.int64)

    def _backward(g: np.ndarray):
        full = np.zeros_like(table.data)
        np.add.at(full, ids, g)
        return (full,)

    return make_result(table.data[ids], (table,), _backward)


# ---------------------------------------------------------------------------
# Activations
# ---------------------------------------------------------------------------


def gelu(x: Tensor) -> Tensor:
    """Exact GELU, ``x · Φ(x)`` with the Gaussian CDF written via erf."""
    cdf = 0.5 * (1.0 + erf(x.data / _SQRT_2))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x.data**2)
    return make_result(x.data * cdf, (x,), lambda g: (g * (cdf + x.data * pdf),))


def leaky_relu(x: Tensor, slope: float = LEAKY_RELU_SLOPE) -> Tensor:
    factor = np.where(x.data > 0, 1.0, slope)
    return make_result(x.data * factor, (x,), lambda g: (g * factor,))


def sigmoid(x: Tensor) -> Tensor:
    out = expit(x.data)
    return make_result(out, (x,), lambda g: (g * out * (1.0 - out),))


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)
    return make_result(out, (x,), lambda g: (g * (1.0 - out**2),))


_ACTIVATIONS = {
    ActivationKind.GELU: gelu,
    ActivationKind.LEAKY_RELU: leaky_relu,
    ActivationKind.SIGMOID: sigmoid,
    ActivationKind.TANH: tanh,
}


def activation(x: Tensor, kind: ActivationKind | str) -> Tensor:
    """Apply the activation named by *kind* elementwise."""
    try:
        fn = _ACTIVATIONS[ActivationKind(kind)]
    except ValueError:
        valid = ", ".join(k.value for k in ActivationKind)
        raise ConfigError(f"Unknown activation {kind!r}. Must be one of: {valid}") from None
    return fn(as_tensor(x))


# ---------------------------------------------------------------------------
# Softmax family
# ---------------------------------------------------------------------------


def _check_temperature(temperature: float) -> None:
    if not temperature > 0:
        raise DomainError(f"temperature must be positive, got {temperature}")


def softmax_np(z: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    """Plain-array tempered softmax over the last axis (no tape)."""
    _check_temperature(temperature)
    scaled = np.asarray(z, dtype=np.float64) / temperature
    shifted = np.exp(scaled - scaled.max(axis=-1, keepdims=True))
    return shifted / shifted.sum(axis=-1, keepdims=True)


def softmax_with_temperature(z: Tensor, temperature: float = 1.0) -> Tensor:
    """``exp(z_i/T) / Σ_j exp(z_j/T)`` over the last axis, max-subtracted."""
    z = as_tensor(z)
    out = softmax_np(z.data, temperature)

    def _backward(g: np.ndarray):
        inner = (g * out).sum(axis=-1, keepdims=True)
        return ((g - inner) * out / temperature,)

    return make_result(out, (z,), _backward)


def log_softmax_with_temperature(z: Tensor, temperature: float = 1.0) -> Tensor:
    z = as_tensor(z)
    _check_temperature(temperature)
    scaled = z.data / temperature
    shifted = scaled - scaled.max(axis=-1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))

    def _backward(g: np.ndarray):
        return ((g - np.exp(out) * g.sum(axis=-1, keepdims=True)) / temperature,)

    return make_result(out, (z,), _backward)


# ---------------------------------------------------------------------------
# Normalisation, dropout, similarity
# ---------------------------------------------------------------------------


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-12) -> Tensor:
    """Normalise over the last axis, then scale by *gamma* and shift by *beta*."""
    width = x.shape[-1]
    centered = x.data - x.data.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered**2).mean(axis=-1, keepdims=True) + eps)
    normed = centered * inv_std

    def _backward(g: np.ndarray):
        d_normed = g * gamma.data
        dx = (inv_std / width) * (
            width * d_normed
            - d_normed.sum(axis=-1, keepdims=True)
            - normed * (d_normed * normed).sum(axis=-1, keepdims=True)
        )
        return dx, g * normed, g

    return make_result(normed * gamma.data + beta.data, (x, gamma, beta), _backward)


def dropout(
    x: Tensor,
    probability: float,
    rng: np.random.Generator,
    training: bool,
) -> Tensor:
    """Inverted dropout; the identity when not training or *probability* is 0."""
    if not training or probability <= 0.0:
        return x
    keep = (rng.random(x.shape) >= probability) / (1.0 - probability)
    return mul(x, keep)


def cosine_similarity(a: Tensor, b: Tensor) -> tuple[Tensor, np.ndarray]:
    """Cosine over the last axis.

    Positions where either vector is all zeros get cosine 0 and no gradient;
    their boolean mask is returned alongside the result.
    """
    if a.shape != b.shape:
        raise DimensionError(f"cosine_similarity: shapes {a.shape} and {b.shape} differ")
    norm_a = np.linalg.norm(a.data, axis=-1)
    norm_b = np.linalg.norm(b.data, axis=-1)
    degenerate = (norm_a == 0.0) | (norm_b == 0.0)
    denom = np.where(degenerate, 1.0, norm_a * norm_b)
    cos = np.where(degenerate, 0.0, (a.data * b.data).sum(axis=-1) / denom)

    def _backward(g: np.ndarray):
        scale = np.where(degenerate, 0.0, g)[..., None]
        safe_a = np.where(degenerate, 1.0, norm_a)[..., None] ** 2
        safe_b = np.where(degenerate, 1.0, norm_b)[..., None] ** 2
        den = denom[..., None]
        ga = scale * (b.data / den - cos[..., None] * a.data / safe_a)
        gb = scale * (a.data / den - cos[..., None] * b.data / safe_b)
        return ga, gb

    return make_result(cos, (a, b), _backward), degenerate


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------


def _weighted_mean(values: Tensor, weights: np.ndarray | None) -> Tensor:
    if weights is None:
        return values.mean()
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != values.shape:
        raise DimensionError(f"weights shape {weights.shape} does not match {values.shape}")
    total = weights.sum()
    if total == 0:
        return Tensor(0.0)
    return (values * weights).sum() * (1.0 / total)


def cross_entropy(
    logits: Tensor,
    target: np.ndarray,
    weights: np.ndarray | None = None,
    temperature: float = 1.0,
) -> Tensor:
    """Mean cross-entropy between softmax(*logits*/T) and *target*.

    *target* is either integer class indices shaped like ``logits.shape[:-1]``
    or a probability distribution shaped like *logits*. *weights* (0/1 per
    position) restricts the mean to the selected positions.
    """
    logits = as_tensor(logits)
    target = np.asarray(target)
    classes = logits.shape[-1]
    if target.shape == logits.shape[:-1] and np.issubdtype(target.dtype, np.integer):
        if target.size and (target.min() < 0 or target.max() >= classes):
            raise DomainError(f"class index out of range [0, {classes})")
        target = np.eye(classes)[target]
    elif target.shape != logits.shape:
        raise DimensionError(
            f"cross_entropy: target shape {target.shape} incompatible with logits {logits.shape}"
        )
    log_probs = log_softmax_with_temperature(logits, temperature)
    per_position = -(log_probs * target).sum(axis=-1)
    return _weighted_mean(per_position, weights)


def binary_cross_entropy(
    probs: Tensor,
    target: np.ndarray,
    weights: np.ndarray | None = None,
) -> Tensor:
    """Mean BCE of probabilities in the open interval (0, 1) against targets."""
    probs = as_tensor(probs)
    target = np.asarray(target, dtype=np.float64)
    if target.shape != probs.shape:
        raise DimensionError(
            f"binary_cross_entropy: target shape {target.shape} != prediction {probs.shape}"
        )
    if np.any((probs.data <= 0.0) | (probs.data >= 1.0)):
        raise DomainError("binary_cross_entropy needs probabilities strictly inside (0, 1)")
    per_item = -(target * log(probs) + (1.0 - target) * log(1.0 - probs))
    return _weighted_mean(per_item, weights)


def binary_cross_entropy_with_logits(
    logits: Tensor,
    target: np.ndarray,
    weights: np.ndarray | None = None,
) -> Tensor:
    """BCE of ``sigmoid(logits)`` computed from the logits, finite for any input."""
    logits = as_tensor(logits)
    target = np.asarray(target, dtype=np.float64)
    if target.shape != logits.shape:
        raise DimensionError(
            f"binary_cross_entropy_with_logits: target shape {target.shape} != {logits.shape}"
        )
    z = logits.data
    per_item = make_result(
        np.logaddexp(0.0, z) - target * z, (logits,), lambda g: (g * (expit(z) - target),)
    )
    return _weighted_mean(per_item, weights)


def mse(pred: Tensor, target: np.ndarray, weights: np.ndarray | None = None) -> Tensor:
    pred = as_tensor(pred)
    target = np.asarray(target, dtype=np.float64)
    if target.shape != pred.shape:
        raise DimensionError(f"mse: target shape {target.shape} != prediction {pred.shape}")
    diff = pred - target
    return _weighted_mean(diff * diff, weights)


def compute_loss(
    pred: Tensor,
    target: np.ndarray,
    kind: LossKind | str,
    weights: np.ndarray | None = None,
) -> Tensor:
    """Dispatch to the loss named by *kind*; always mean-reduced."""
    try:
        kind = LossKind(kind)
    except ValueError:
        valid = ", ".join(k.value for k in LossKind)
        raise ConfigError(f"Unknown loss {kind!r}. Must be one of: {valid}") from None
    if kind == LossKind.CROSS_ENTROPY:
        return cross_entropy(pred, target, weights)
    if kind == LossKind.BINARY_CROSS_ENTROPY:
        return binary_cross_entropy(pred, target, weights)
    return mse(pred, target, weights)
