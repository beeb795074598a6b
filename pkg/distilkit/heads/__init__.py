"""Task head factory and exports."""

from __future__ import annotations

from .base import HEAD_PREFIX, TaskHead, TaskKind, TaskType
from .sequence import BinaryClassificationHead, MultiClassClassificationHead, PairRegressionHead
from .token import TokenClassificationHead

__all__ = [
    "HEAD_PREFIX",
    "BinaryClassificationHead",
    "MultiClassClassificationHead",
    "PairRegressionHead",
    "TaskHead",
    "TaskKind",
    "TaskType",
    "TokenClassificationHead",
    "get_head",
]

_HEADS: dict[TaskType, type[TaskHead]] = {
    TaskType.TOKEN_CLASSIFICATION: TokenClassificationHead,
    TaskType.BINARY_CLASSIFICATION: BinaryClassificationHead,
    TaskType.MULTICLASS_CLASSIFICATION: MultiClassClassificationHead,
    TaskType.PAIR_REGRESSION: PairRegressionHead,
}


def get_head(kind: TaskKind, hidden: int, dropout: float = 0.1, seed: int = 42) -> TaskHead:
    """Return the head implementation for *kind*."""
    return _HEADS[kind.type](kind, hidden, dropout, seed)
