"""Per-token classification head (POS tagging, NER)."""

from __future__ import annotations

import numpy as np

from ..encoder import EncoderOutput
from ..numerics import Tensor, cross_entropy, dropout, leaky_relu, softmax_np
from .base import TaskHead


class TokenClassificationHead(TaskHead):
    """``LeakyReLU(Wᵀ·dropout(E_i) + b)`` per token, softmax over labels."""

    def scores(self, output: EncoderOutput, training: bool) -> Tensor:
        features = dropout(output.last_hidden, self.dropout, self._dropout_rng, training)
        return leaky_relu(self._project(features))

    def loss(self, scores: Tensor, targets: np.ndarray, weights: np.ndarray | None) -> Tensor:
        return cross_entropy(scores, np.asarray(targets, dtype=np.int64), weights=weights)

    def readout(self, scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        probs = softmax_np(scores)
        return probs.argmax(axis=-1), probs
