"""Readers for tab-separated task datasets and prediction-set files."""

from __future__ import annotations

import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError
from .fileio import atomic_open
from .models import PredictionKind, PredictionSet

logger = logging.getLogger(__name__)

STS_MAX_SCORE = 5.0


@dataclass(frozen=True)
class TaggedSentence:
    """One sentence of a token-per-line corpus with its tag sequence."""

    id: str
    tokens: tuple[str, ...]
    tags: tuple[str, ...]


@dataclass(frozen=True)
class TextExample:
    """One classification or regression example with one or two text fields."""

    id: str
    target: str
    text_a: str
    text_b: str | None = None


def _lines(path: Path) -> Iterator[tuple[int, str]]:
    try:
        with open(path, encoding="utf-8") as fh:
            for number, line in enumerate(fh, start=1):
                yield number, line.rstrip("\r\n")
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8 ({exc.reason})") from exc


def read_tagged(path: str | Path, tag_column: int = 1) -> list[TaggedSentence]:
    """Token-per-line TSV; blank lines end sentences, ``#`` lines are comments.

    Column 0 holds the token and *tag_column* the tag.
    """
    path = Path(path)
    sentences: list[TaggedSentence] = []
    tokens: list[str] = []
    tags: list[str] = []

    def flush() -> None:
        if tokens:
            sentences.append(TaggedSentence(str(len(sentences)), tuple(tokens), tuple(tags)))
            tokens.clear()
            tags.clear()

    for number, line in _lines(path):
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            continue
        columns = line.split("\t")
        if len(columns) <= tag_column:
            raise DataError(
                f"{path}:{number}: expected at least {tag_column + 1} tab-separated "
                f"columns, found {len(columns)}"
            )
        if not columns[0] or not columns[tag_column]:
            raise DataError(f"{path}:{number}: empty token or tag")
        tokens.append(columns[0])
        tags.append(columns[tag_column])
    flush()
    logger.debug("Read %d sentence(s) from %s.", len(sentences), path)
    return sentences


def read_examples(path: str | Path, pair: bool = False) -> list[TextExample]:
    """One example per line: ``id<TAB>target<TAB>text_a[<TAB>text_b]``."""
    path = Path(path)
    expected = 4 if pair else 3
    examples: list[TextExample] = []
    seen: set[str] = set()
    for number, line in _lines(path):
        if not line.strip() or line.startswith("#"):
            continue
        columns = line.split("\t")
        if len(columns) != expected:
            raise DataError(
                f"{path}:{number}: expected {expected} tab-separated columns, found {len(columns)}"
            )
        example_id, target = columns[0], columns[1]
        if not example_id or example_id in seen:
            raise DataError(f"{path}:{number}: missing or duplicate example id {example_id!r}")
        seen.add(example_id)
        examples.append(
            TextExample(example_id, target, columns[2], columns[3] if pair else None)
        )
    logger.debug("Read %d example(s) from %s.", len(examples), path)
    return examples


def parse_score(example: TextExample, index: int) -> float:
    """Similarity score in [0, 5] rescaled to [0, 1]."""
    try:
        value = float(example.target)
    except ValueError:
        raise DataError(
            f"example {index} ({example.id}): score {example.target!r} is not a number"
        )
    if not 0.0 <= value <= STS_MAX_SCORE:
        raise DataError(f"example {index} ({example.id}): score {value} outside [0, 5]")
    return value / STS_MAX_SCORE


# ---------------------------------------------------------------------------
# Prediction sets
# ---------------------------------------------------------------------------

_CLASSIFICATION_HEADER = ("id", "label", "probabilities")
_REGRESSION_HEADER = ("id", "score")
_LABELS_PREFIX = "# labels: "


def write_predictions(predictions: PredictionSet, path: str | Path) -> None:
    """TSV with a header row; probabilities are comma-separated in one column.

    Classification labels are written as class indices; label names, when
    known, go on a leading ``# labels:`` comment line.
    """
    with atomic_open(path) as fh:
        if predictions.kind == PredictionKind.CLASSIFICATION:
            if predictions.label_names:
                fh.write(_LABELS_PREFIX + ",".join(predictions.label_names) + "\n")
            fh.write("\t".join(_CLASSIFICATION_HEADER) + "\n")
            for example_id, label, row in zip(
                predictions.ids, predictions.labels, predictions.probabilities
            ):
                probs = ",".join(repr(float(p)) for p in row)
                fh.write(f"{example_id}\t{int(label)}\t{probs}\n")
        else:
            fh.write("\t".join(_REGRESSION_HEADER) + "\n")
            for example_id, value in zip(predictions.ids, predictions.scalars):
                fh.write(f"{example_id}\t{float(value)!r}\n")


def read_predictions(path: str | Path) -> PredictionSet:
    path = Path(path)
    rows = list(_lines(path))
    names = None
    if rows and rows[0][1].startswith(_LABELS_PREFIX):
        names = rows[0][1][len(_LABELS_PREFIX):].split(",")
        rows = rows[1:]
    if not rows:
        raise FormatError(f"{path}: empty prediction file")
    header = tuple(rows[0][1].split("\t"))
    body = [(n, line) for n, line in rows[1:] if line.strip()]
    ids: list[str] = []
    if header == _REGRESSION_HEADER:
        scalars = []
        for number, line in body:
            columns = line.split("\t")
            if len(columns) != 2:
                raise DataError(f"{path}:{number}: expected 2 columns, found {len(columns)}")
            try:
                scalars.append(float(columns[1]))
            except ValueError:
                raise DataError(f"{path}:{number}: score {columns[1]!r} is not a number")
            ids.append(columns[0])
        return PredictionSet(ids, PredictionKind.REGRESSION, scalars=np.array(scalars))
    if header != _CLASSIFICATION_HEADER:
        raise FormatError(f"{path}: unrecognised header {rows[0][1]!r}")

    labels: list[int] = []
    probabilities = []
    for number, line in body:
        columns = line.split("\t")
        if len(columns) != 3:
            raise DataError(f"{path}:{number}: expected 3 columns, found {len(columns)}")
        try:
            labels.append(int(columns[1]))
            probabilities.append([float(p) for p in columns[2].split(",")])
        except ValueError:
            raise DataError(f"{path}:{number}: malformed label or probability vector")
        ids.append(columns[0])
    widths = {len(p) for p in probabilities}
    if len(widths) > 1:
        raise DataError(f"{path}: probability vectors differ in length {sorted(widths)}")
    width = widths.pop() if widths else 0
    probs = np.array(probabilities, dtype=np.float64).reshape(len(ids), width)
    return PredictionSet(
        ids, PredictionKind.CLASSIFICATION, labels=labels, probabilities=probs, label_names=names
    )


def write_tagged(sentences: Sequence[TaggedSentence], path: str | Path) -> None:
    with atomic_open(path) as fh:
        for sentence in sentences:
            for token, tag in zip(sentence.tokens, sentence.tags):
                fh.write(f"{token}\t{tag}\n")
            fh.write("\n")


def write_examples(examples: Sequence[TextExample], path: str | Path) -> None:
    with atomic_open(path) as fh:
        for example in examples:
            columns = [example.id, example.target, example.text_a]
            if example.text_b is not None:
                columns.append(example.text_b)
            fh.write("\t".join(columns) + "\n")
