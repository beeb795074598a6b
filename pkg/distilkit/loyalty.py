"""Teacher-student agreement: label, probability and regression loyalty."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from enum import StrEnum

import numpy as np
from scipy.special import rel_entr

from .errors import AlignmentError, ConfigError, ContractError, DistilkitError
from .models import LoyaltyReport, PredictionKind, PredictionSet
from .taskmetrics import accuracy, pearson

logger = logging.getLogger(__name__)

PROBABILITY_FLOOR = 1e-12
_LN2 = np.log(2.0)


class Divergence(StrEnum):
    JS = "js"
    SYMMETRIC_KL = "symmetric_kl"


def _aligned(
    teacher: PredictionSet, student: PredictionSet, kind: PredictionKind, metric: str
) -> PredictionSet:
    """Check both sets have *kind* and return the student rows in teacher order."""
    for role, preds in (("teacher", teacher), ("student", student)):
        if preds.kind != kind:
            raise ContractError(
                f"{metric} needs {kind} predictions, the {role} set is {preds.kind}"
            )
    extra = sorted(set(student.ids) - set(teacher.ids))
    if extra:
        raise AlignmentError("student set has ids the teacher set lacks", extra)
    return student.reorder(teacher.ids)


def label_loyalty(teacher: PredictionSet, student: PredictionSet) -> float:
    """Accuracy of the student's labels with the teacher's labels as ground truth."""
    student = _aligned(teacher, student, PredictionKind.CLASSIFICATION, "label loyalty")
    return accuracy(teacher.labels, student.labels)


def _kl_bits(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    return rel_entr(p, q).sum(axis=-1) / _LN2


def js_divergence(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise Jensen-Shannon divergence in bits, ``½KL(P‖M) + ½KL(Q‖M)``."""
    p = np.maximum(np.asarray(p, dtype=np.float64), PROBABILITY_FLOOR)
    q = np.maximum(np.asarray(q, dtype=np.float64), PROBABILITY_FLOOR)
    m = 0.5 * (p + q)
    return np.clip(0.5 * _kl_bits(p, m) + 0.5 * _kl_bits(q, m), 0.0, 1.0)


def symmetric_kl(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise ``(KL(P‖Q) + KL(Q‖P)) / 2`` in bits; unbounded above."""
    p = np.maximum(np.asarray(p, dtype=np.float64), PROBABILITY_FLOOR)
    q = np.maximum(np.asarray(q, dtype=np.float64), PROBABILITY_FLOOR)
    return np.maximum(0.5 * (_kl_bits(p, q) + _kl_bits(q, p)), 0.0)


_DIVERGENCES = {Divergence.JS: js_divergence, Divergence.SYMMETRIC_KL: symmetric_kl}


def probability_loyalty(
    teacher: PredictionSet,
    student: PredictionSet,
    divergence: Divergence | str = Divergence.JS,
) -> float:
    """Mean over examples of ``1 − sqrt(D(P_t, P_s))``.

    Probabilities are floored at 1e-12 before logarithms. Under the symmetric
    KL divergence the per-example value is clamped at 0.
    """
    try:
        fn = _DIVERGENCES[Divergence(divergence)]
    except ValueError:
        valid = ", ".join(d.value for d in Divergence)
        raise ConfigError(f"Unknown divergence {divergence!r}. Must be one of: {valid}") from None
    student = _aligned(teacher, student, PredictionKind.CLASSIFICATION, "probability loyalty")
    if teacher.num_classes != student.num_classes:
        raise ContractError(
            f"teacher predicts {teacher.num_classes} classes, student {student.num_classes}"
        )
    if not len(teacher):
        raise ContractError("probability loyalty needs at least one example")
    per_example = 1.0 - np.sqrt(fn(teacher.probabilities, student.probabilities))
    return float(np.mean(np.maximum(per_example, 0.0)))


def regression_loyalty(teacher: PredictionSet, student: PredictionSet) -> float:
    """Pearson correlation between teacher and student scalar predictions."""
    student = _aligned(teacher, student, PredictionKind.REGRESSION, "regression loyalty")
    return pearson(teacher.scalars, student.scalars)


class LoyaltyMetric(StrEnum):
    LABEL = "label"
    PROBABILITY = "probability"
    REGRESSION = "regression"


def default_metrics(kind: PredictionKind) -> tuple[LoyaltyMetric, ...]:
    if kind == PredictionKind.REGRESSION:
        return (LoyaltyMetric.REGRESSION,)
    return (LoyaltyMetric.LABEL, LoyaltyMetric.PROBABILITY)


def _pairwise(
    teacher: PredictionSet,
    student: PredictionSet,
    divergence: Divergence | str,
    metrics: Sequence[LoyaltyMetric],
) -> dict[str, float | None]:
    row: dict[str, float | None] = {
        "label_loyalty": None,
        "probability_loyalty": None,
        "regression_loyalty": None,
    }
    for metric in metrics:
        if metric == LoyaltyMetric.LABEL:
            row["label_loyalty"] = label_loyalty(teacher, student)
        elif metric == LoyaltyMetric.PROBABILITY:
            row["probability_loyalty"] = probability_loyalty(teacher, student, divergence)
        else:
            row["regression_loyalty"] = regression_loyalty(teacher, student)
    return row


def multi_teacher_loyalty(
    teachers: Sequence[PredictionSet],
    student: PredictionSet,
    divergence: Divergence | str = Divergence.JS,
    metrics: Sequence[LoyaltyMetric | str] | None = None,
) -> LoyaltyReport:
    """Every metric per teacher, then the arithmetic mean across teachers.

    *metrics* defaults to label and probability loyalty for classification
    sets and regression loyalty for regression sets.
    """
    if not teachers:
        raise ConfigError("loyalty needs at least one teacher prediction set")
    try:
        chosen = [LoyaltyMetric(m) for m in metrics or default_metrics(teachers[0].kind)]
    except ValueError:
        valid = ", ".join(m.value for m in LoyaltyMetric)
        raise ConfigError(f"Unknown loyalty metric in {metrics!r}. Must be: {valid}") from None
    per_teacher = []
    for index, teacher in enumerate(teachers):
        try:
            per_teacher.append(_pairwise(teacher, student, divergence, chosen))
        except DistilkitError as exc:
            wrapped = type(exc)(f"teacher {index}: {exc}")
            wrapped.__dict__.update(exc.__dict__, teacher_index=index)
            raise wrapped from exc
        logger.debug("teacher %d: %s", index, per_teacher[-1])

    def mean(key: str) -> float | None:
        values = [row[key] for row in per_teacher]
        if any(v is None for v in values):
            return None
        return float(np.mean(values))

    return LoyaltyReport(
        label_loyalty=mean("label_loyalty"),
        probability_loyalty=mean("probability_loyalty"),
        regression_loyalty=mean("regression_loyalty"),
        per_teacher=per_teacher,
    )
