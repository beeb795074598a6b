"""Core data records shared between distilkit modules."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np

from .errors import AlignmentError, ContractError

PROBABILITY_TOLERANCE = 1e-6


class PredictionKind(StrEnum):
    CLASSIFICATION = "classification"
    REGRESSION = "regression"


@dataclass
class PredictionSet:
    """Per-example outputs of one model on one dataset, keyed by example id.

    Classification sets carry integer labels and probability rows summing to
    one; regression sets carry one scalar per example.
    """

    ids: list[str]
    kind: PredictionKind
    labels: np.ndarray | None = None
    probabilities: np.ndarray | None = None
    scalars: np.ndarray | None = None
    label_names: list[str] | None = None

    def __post_init__(self) -> None:
        self.kind = PredictionKind(self.kind)
        n = len(self.ids)
        if len(set(self.ids)) != n:
            raise ContractError("prediction set ids must be unique")
        if self.kind == PredictionKind.CLASSIFICATION:
            if self.labels is None or self.probabilities is None:
                raise ContractError("classification predictions need labels and probabilities")
            self.labels = np.asarray(self.labels, dtype=np.int64)
            self.probabilities = np.asarray(self.probabilities, dtype=np.float64)
            if self.labels.shape != (n,) or self.probabilities.ndim != 2 or (
                self.probabilities.shape[0] != n
            ):
                raise ContractError(
                    f"expected {n} labels and {n} probability rows, got "
                    f"{self.labels.shape} and {self.probabilities.shape}"
                )
            sums = self.probabilities.sum(axis=1)
            if n and np.max(np.abs(sums - 1.0)) > PROBABILITY_TOLERANCE:
                raise ContractError("probability rows must sum to 1 within 1e-6")
        else:
            if self.scalars is None:
                raise ContractError("regression predictions need scalars")
            self.scalars = np.asarray(self.scalars, dtype=np.float64)
            if self.scalars.shape != (n,):
                raise ContractError(f"expected {n} scalars, got shape {self.scalars.shape}")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def num_classes(self) -> int:
        return 0 if self.probabilities is None else int(self.probabilities.shape[1])

    def reorder(self, ids: Sequence[str]) -> PredictionSet:
        """Return the rows for *ids*, in that order."""
        index = {example_id: i for i, example_id in enumerate(self.ids)}
        missing = [i for i in ids if i not in index]
        if missing:
            raise AlignmentError("prediction set lacks ids", missing)
        rows = np.array([index[i] for i in ids], dtype=np.int64)
        return PredictionSet(
            ids=list(ids),
            kind=self.kind,
            labels=None if self.labels is None else self.labels[rows],
            probabilities=None if self.probabilities is None else self.probabilities[rows],
            scalars=None if self.scalars is None else self.scalars[rows],
            label_names=self.label_names,
        )


@dataclass
class LoyaltyReport:
    """Student-to-teacher agreement; ``per_teacher`` holds one entry per teacher."""

    label_loyalty: float | None = None
    probability_loyalty: float | None = None
    regression_loyalty: float | None = None
    per_teacher: list[dict[str, float | None]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "label_loyalty": self.label_loyalty,
            "probability_loyalty": self.probability_loyalty,
            "regression_loyalty": self.regression_loyalty,
            "per_teacher": self.per_teacher,
        }


@dataclass(frozen=True)
class LatencyStats:
    """Wall-clock forward latency over the timed repetitions, in milliseconds."""

    samples_ms: tuple[float, ...]
    median_ms: float
    mean_ms: float
    stddev_ms: float

    @property
    def reps(self) -> int:
        return len(self.samples_ms)

    @property
    def max_ms(self) -> float:
        return max(self.samples_ms)


@dataclass(frozen=True)
class BenchRow:
    model: str
    label: str
    length: int
    stats: LatencyStats
    threads: int = 1

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "label": self.label,
            "length": self.length,
            "reps": self.stats.reps,
            "median_ms": self.stats.median_ms,
            "mean_ms": self.stats.mean_ms,
            "stddev_ms": self.stats.stddev_ms,
            "threads": self.threads,
        }


@dataclass
class RunManifest:
    """What a CLI command ran with and what it produced."""

    command: str
    config: dict
    seed: int
    threads: int
    inputs: list[str] = field(default_factory=list)
    outputs: dict[str, str] = field(default_factory=dict)  # path -> sha256
    timestamp: str = ""
    version: str = ""

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "threads": self.threads,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "timestamp": self.timestamp,
            "version": self.version,
        }
