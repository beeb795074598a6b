"""Evaluation metrics: accuracy, macro-F1, four-schema NER scoring, correlations."""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from scipy.stats import rankdata

from .errors import ContractError, DataError, UndefinedCorrelationError

# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


def _paired(gold: Sequence, pred: Sequence, name: str) -> tuple[np.ndarray, np.ndarray]:
    gold, pred = np.asarray(gold), np.asarray(pred)
    if gold.shape != pred.shape or gold.ndim != 1:
        raise ContractError(f"{name}: gold has {gold.shape}, pred has {pred.shape}")
    if gold.size == 0:
        raise ContractError(f"{name}: empty inputs")
    return gold, pred


def accuracy(gold: Sequence, pred: Sequence) -> float:
    gold, pred = _paired(gold, pred, "accuracy")
    return float(np.mean(gold == pred))


def per_class_f1(gold: Sequence[int], pred: Sequence[int], num_labels: int) -> np.ndarray:
    gold, pred = _paired(gold, pred, "macro_f1")
    if gold.min() < 0 or pred.min() < 0 or gold.max() >= num_labels or pred.max() >= num_labels:
        raise ContractError(f"macro_f1: labels must lie in [0, {num_labels})")
    scores = np.zeros(num_labels)
    for c in range(num_labels):
        tp = int(np.sum((gold == c) & (pred == c)))
        fp = int(np.sum((gold != c) & (pred == c)))
        fn = int(np.sum((gold == c) & (pred != c)))
        denom = 2 * tp + fp + fn
        scores[c] = 2 * tp / denom if denom else 0.0
    return scores


def macro_f1(gold: Sequence[int], pred: Sequence[int], num_labels: int) -> float:
    """Unweighted mean of per-class F1 over all *num_labels* classes.

    A class absent from both sides scores 0 and still counts in the mean.
    """
    return float(per_class_f1(gold, pred, num_labels).mean())


# ---------------------------------------------------------------------------
# Correlation
# ---------------------------------------------------------------------------


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ContractError(f"pearson: shapes {x.shape} and {y.shape} differ")
    if x.size < 2:
        raise ContractError("pearson needs at least two points")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation is undefined for a zero-variance input")
    return float(np.clip((dx @ dy) / np.sqrt(sxx * syy), -1.0, 1.0))


def average_ranks(x: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank block."""
    return rankdata(np.asarray(x, dtype=np.float64), method="average")


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    return pearson(average_ranks(x), average_ranks(y))


# ---------------------------------------------------------------------------
# NER
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Span:
    start: int
    end: int  # exclusive
    type: str

    def overlaps(self, other: Span) -> bool:
        return self.start < other.end and other.start < self.end

    def same_bounds(self, other: Span) -> bool:
        return self.start == other.start and self.end == other.end


def _parse_tag(tag: str, position: str) -> tuple[str, str | None]:
    if tag == "O":
        return "O", None
    prefix, sep, entity = tag.partition("-")
    if not sep or prefix not in ("B", "I") or not entity:
        raise DataError(f"malformed IOB label {tag!r} at {position}")
    return prefix, entity


def iob_spans(tags: Sequence[str], where: str = "") -> list[Span]:
    """Decode IOB tags into spans.

    ``I-X`` that does not continue an open ``X`` span opens a new one.
    """
    spans: list[Span] = []
    start: int | None = None
    current: str | None = None
    for i, tag in enumerate(tags):
        prefix, entity = _parse_tag(tag, f"{where}token {i}".strip())
        continues = prefix == "I" and entity == current
        if start is not None and not continues:
            spans.append(Span(start, i, current))
            start, current = None, None
        if prefix != "O" and not continues:
            start, current = i, entity
    if start is not None:
        spans.append(Span(start, len(tags), current))
    return spans


@dataclass
class NerDocument:
    tokens: list[str]
    gold: list[str]
    pred: list[str]

    def __post_init__(self) -> None:
        if not len(self.tokens) == len(self.gold) == len(self.pred):
            raise DataError(
                f"NER document has {len(self.tokens)} tokens, {len(self.gold)} gold and "
                f"{len(self.pred)} predicted labels"
            )


class Schema(StrEnum):
    STRICT = "strict"
    EXACT = "exact"
    PARTIAL = "partial"
    TYPE = "type"


@dataclass
class EventCounts:
    correct: int = 0
    incorrect: int = 0
    partial: int = 0
    missed: int = 0
    spurious: int = 0

    @property
    def possible(self) -> int:
        return self.correct + self.incorrect + self.partial + self.missed

    @property
    def actual(self) -> int:
        return self.correct + self.incorrect + self.partial + self.spurious


@dataclass
class SchemaResult:
    counts: EventCounts
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, counts: EventCounts, schema: Schema) -> SchemaResult:
        score = counts.correct
        if schema == Schema.PARTIAL:
            score = counts.correct + 0.5 * counts.partial
        precision = score / counts.actual if counts.actual else 0.0
        recall = score / counts.possible if counts.possible else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls(counts, precision, recall, f1)

    def to_dict(self) -> dict:
        c = self.counts
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "correct": c.correct,
            "incorrect": c.incorrect,
            "partial": c.partial,
            "missed": c.missed,
            "spurious": c.spurious,
            "possible": c.possible,
            "actual": c.actual,
        }


@dataclass
class SchemaScores:
    """Event-level scores per schema, plus per-entity-type scores and their macro F1."""

    schemas: dict[Schema, SchemaResult]
    per_type: dict[str, dict[Schema, SchemaResult]] = field(default_factory=dict)

    def macro_f1(self, schema: Schema) -> float:
        if not self.per_type:
            return 0.0
        return float(np.mean([scores[schema].f1 for scores in self.per_type.values()]))

    def to_dict(self) -> dict:
        return {
            schema.value: {
                **self.schemas[schema].to_dict(),
                "macro_f1": self.macro_f1(schema),
            }
            for schema in Schema
        }


# Outcome of one event under (strict, exact, partial, type).
_EXACT_MATCH = ("correct", "correct", "correct", "correct")
_BOUNDS_ONLY = ("incorrect", "correct", "correct", "incorrect")
_OVERLAP_SAME_TYPE = ("incorrect", "incorrect", "partial", "correct")
_OVERLAP_OTHER_TYPE = ("incorrect", "incorrect", "partial", "incorrect")
_SPURIOUS = ("spurious",) * 4
_MISSED = ("missed",) * 4


def _classify(gold: list[Span], pred: list[Span]) -> list[tuple[str, tuple[str, ...]]]:
    """Pair every predicted span with a gold span; return (entity type, outcomes)."""
    events = []
    matched: set[int] = set()
    for p in pred:
        hit = next((i for i, g in enumerate(gold) if g.same_bounds(p)), None)
        if hit is not None:
            g = gold[hit]
            outcome = _EXACT_MATCH if g.type == p.type else _BOUNDS_ONLY
        else:
            hit = next((i for i, g in enumerate(gold) if g.overlaps(p)), None)
            if hit is None:
                events.append((p.type, _SPURIOUS))
                continue
            g = gold[hit]
            outcome = _OVERLAP_SAME_TYPE if g.type == p.type else _OVERLAP_OTHER_TYPE
        matched.add(hit)
        events.append((g.type, outcome))
    events.extend((g.type, _MISSED) for i, g in enumerate(gold) if i not in matched)
    return events


def ner_schema_eval(docs: Sequence[NerDocument]) -> SchemaScores:
    """Score predicted entity spans under the strict, exact, partial and type schemas.

    Events are attributed to the gold span's type, or the predicted type when
    spurious; the per-type breakdown uses that attribution.
    """
    totals = {schema: EventCounts() for schema in Schema}
    by_type: dict[str, dict[Schema, EventCounts]] = defaultdict(
        lambda: {schema: EventCounts() for schema in Schema}
    )
    for d, doc in enumerate(docs):
        gold = iob_spans(doc.gold, f"document {d} gold ")
        pred = iob_spans(doc.pred, f"document {d} pred ")
        for entity, outcomes in _classify(gold, pred):
            for schema, outcome in zip(Schema, outcomes):
                for counts in (totals[schema], by_type[entity][schema]):
                    setattr(counts, outcome, getattr(counts, outcome) + 1)
    return SchemaScores(
        schemas={s: SchemaResult.from_counts(totals[s], s) for s in Schema},
        per_type={
            entity: {s: SchemaResult.from_counts(c[s], s) for s in Schema}
            for entity, c in sorted(by_type.items())
        },
    )
