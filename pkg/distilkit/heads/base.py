"""Abstract base class for task heads."""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from ..encoder import EncoderOutput, truncated_normal
from ..errors import ConfigError
from ..numerics import Tensor

logger = logging.getLogger(__name__)

HEAD_PREFIX = "head."


class TaskType(StrEnum):
    TOKEN_CLASSIFICATION = "token_classification"
    BINARY_CLASSIFICATION = "binary_classification"
    MULTICLASS_CLASSIFICATION = "multiclass_classification"
    PAIR_REGRESSION = "pair_regression"


@dataclass(frozen=True)
class TaskKind:
    """What a head predicts; ``num_labels`` only matters for the labelled kinds."""

    type: TaskType
    num_labels: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "type", TaskType(self.type))
        if self.type in (TaskType.TOKEN_CLASSIFICATION, TaskType.MULTICLASS_CLASSIFICATION):
            if self.num_labels < 2:
                raise ConfigError(f"{self.type} needs at least 2 labels, got {self.num_labels}")
        else:
            object.__setattr__(self, "num_labels", 1)

    @classmethod
    def token_classification(cls, num_labels: int) -> TaskKind:
        return cls(TaskType.TOKEN_CLASSIFICATION, num_labels)

    @classmethod
    def binary(cls) -> TaskKind:
        return cls(TaskType.BINARY_CLASSIFICATION)

    @classmethod
    def multiclass(cls, num_labels: int) -> TaskKind:
        return cls(TaskType.MULTICLASS_CLASSIFICATION, num_labels)

    @classmethod
    def pair_regression(cls) -> TaskKind:
        return cls(TaskType.PAIR_REGRESSION)

    @property
    def output_width(self) -> int:
        return self.num_labels


class TaskHead(ABC):
    """Interface every task head implements.

    A head owns its parameters (named ``head.*``), maps encoder output to raw
    scores, turns scores into a training loss and reads predictions out of
    them.
    """

    def __init__(self, kind: TaskKind, hidden: int, dropout: float, seed: int) -> None:
        self.kind = kind
        self.dropout = dropout
        rng = np.random.default_rng([seed, 2])
        self.params: dict[str, Tensor] = {
            f"{HEAD_PREFIX}weight": Tensor(
                truncated_normal((hidden, kind.output_width), rng),
                requires_grad=True,
                name=f"{HEAD_PREFIX}weight",
            ),
            f"{HEAD_PREFIX}bias": Tensor(
                np.zeros(kind.output_width), requires_grad=True, name=f"{HEAD_PREFIX}bias"
            ),
        }
        self._dropout_rng = np.random.default_rng([seed, 3])

    def _project(self, features: Tensor) -> Tensor:
        return features @ self.params[f"{HEAD_PREFIX}weight"] + self.params[f"{HEAD_PREFIX}bias"]

    @abstractmethod
    def scores(self, output: EncoderOutput, training: bool) -> Tensor:
        """Raw head output before the probability readout."""

    @abstractmethod
    def loss(self, scores: Tensor, targets: np.ndarray, weights: np.ndarray | None) -> Tensor:
        """Mean training loss of *scores* against *targets*."""

    @abstractmethod
    def readout(self, scores: np.ndarray) -> tuple[np.ndarray | None, np.ndarray]:
        """Return (labels, probabilities) or (None, scalars) for plain score arrays."""
