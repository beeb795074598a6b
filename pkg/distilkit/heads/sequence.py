"""Heads over the [CLS] embedding: binary, multi-class and pair regression."""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from ..encoder import EncoderOutput
from ..numerics import (
    Tensor,
    binary_cross_entropy_with_logits,
    cross_entropy,
    dropout,
    mse,
    sigmoid,
    softmax_np,
)
from .base import TaskHead


class _ClsHead(TaskHead):
    def _cls_features(self, output: EncoderOutput, training: bool) -> Tensor:
        cls = output.last_hidden[:, 0, :]
        return dropout(cls, self.dropout, self._dropout_rng, training)


class BinaryClassificationHead(_ClsHead):
    """``σ(WᵀC + b)``; the loss is computed from the logit for stability."""

    def scores(self, output: EncoderOutput, training: bool) -> Tensor:
        return self._project(self._cls_features(output, training)).reshape(-1)

    def loss(self, scores: Tensor, targets: np.ndarray, weights: np.ndarray | None) -> Tensor:
        return binary_cross_entropy_with_logits(scores, np.asarray(targets, dtype=np.float64),
                                                weights)

    def readout(self, scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        positive = expit(scores)
        labels = (positive > 0.5).astype(np.int64)
        return labels, np.stack([1.0 - positive, positive], axis=-1)


class MultiClassClassificationHead(_ClsHead):
    def scores(self, output: EncoderOutput, training: bool) -> Tensor:
        return self._project(self._cls_features(output, training))

    def loss(self, scores: Tensor, targets: np.ndarray, weights: np.ndarray | None) -> Tensor:
        return cross_entropy(scores, np.asarray(targets, dtype=np.int64), weights=weights)

    def readout(self, scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        probs = softmax_np(scores)
        return probs.argmax(axis=-1), probs


class PairRegressionHead(_ClsHead):
    """``σ(WᵀC + b)`` trained with squared error against scores rescaled to [0, 1]."""

    def scores(self, output: EncoderOutput, training: bool) -> Tensor:
        return self._project(self._cls_features(output, training)).reshape(-1)

    def loss(self, scores: Tensor, targets: np.ndarray, weights: np.ndarray | None) -> Tensor:
        return mse(sigmoid(scores), np.asarray(targets, dtype=np.float64), weights)

    def readout(self, scores: np.ndarray) -> tuple[None, np.ndarray]:
        return None, expit(scores)
