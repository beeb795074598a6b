"""Task presets, feature building, fine-tuning with early stopping, prediction."""

from __future__ import annotations

import dataclasses
import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path

import numpy as np

from .config import EarlyStopping, FinetuneHyperparams
from .datasets import TaggedSentence, TextExample, parse_score, read_examples, read_tagged
from .encoder import (
    EncodedBatch,
    EncoderModel,
    checkpoint_bytes,
    forward,
    model_from_arrays,
    read_checkpoint,
)
from .errors import (
    ConfigError,
    DataError,
    FormatError,
    InputError,
    TrainingDivergedError,
    UndefinedCorrelationError,
)
from .fileio import atomic_write_bytes
from .heads import TaskHead, TaskKind, TaskType, get_head
from .models import PredictionKind, PredictionSet
from .numerics import AdamW, LinearSchedule, Tensor, backward, current_tape, no_grad
from .taskmetrics import NerDocument, Schema, accuracy, macro_f1, ner_schema_eval, pearson, spearman
from .tokenizer import UNK, Vocab, encode_token_ids, tokenize

logger = logging.getLogger(__name__)

PREDICT_BATCH_SIZE = 64


class InputLayout(StrEnum):
    TAGGED = "tagged"  # token-per-line, blank line between sentences
    SINGLE = "single"  # id, target, text
    PAIR = "pair"  # id, target, text_a, text_b


@dataclass(frozen=True)
class TaskPreset:
    """Built-in description of one evaluation task."""

    name: str
    task_type: TaskType
    layout: InputLayout
    metrics: tuple[str, ...]
    hyperparams: FinetuneHyperparams
    tag_column: int = 1
    num_labels: int | None = None

    def read(self, path: str | Path) -> list[TaggedSentence] | list[TextExample]:
        if self.layout == InputLayout.TAGGED:
            return read_tagged(path, self.tag_column)
        return read_examples(path, pair=self.layout == InputLayout.PAIR)

    def label_set(self, *datasets: Sequence) -> list[str] | None:
        """Sorted union of the labels seen in *datasets*; ``None`` for regression."""
        if self.task_type == TaskType.PAIR_REGRESSION:
            return None
        labels: set[str] = set()
        for data in datasets:
            for item in data:
                if isinstance(item, TaggedSentence):
                    labels.update(item.tags)
                else:
                    labels.add(item.target)
        names = sorted(labels)
        expected = 2 if self.task_type == TaskType.BINARY_CLASSIFICATION else self.num_labels
        if expected is not None and len(names) != expected:
            raise DataError(
                f"task {self.name} needs {expected} labels, the data has {len(names)}: "
                f"{', '.join(names)}"
            )
        if len(names) < 2:
            raise DataError(f"task {self.name} needs at least 2 labels, found {names}")
        return names

    def kind(self, label_names: Sequence[str] | None) -> TaskKind:
        if self.task_type in (TaskType.TOKEN_CLASSIFICATION, TaskType.MULTICLASS_CLASSIFICATION):
            return TaskKind(self.task_type, len(label_names or ()))
        return TaskKind(self.task_type)

    def features(
        self,
        data: Sequence,
        vocab: Vocab,
        label_names: Sequence[str] | None,
        max_len: int,
    ) -> TaskFeatures:
        kind = self.kind(label_names)
        if self.layout == InputLayout.TAGGED:
            return tagged_features(data, vocab, kind, label_names, max_len)
        return example_features(data, vocab, kind, label_names, max_len)


TASK_PRESETS: dict[str, TaskPreset] = {
    "upos": TaskPreset(
        "upos", TaskType.TOKEN_CLASSIFICATION, InputLayout.TAGGED, ("macro_f1", "accuracy"),
        FinetuneHyperparams(epochs=10, batch_size=16, warmup_steps=1000, learning_rate=1e-4),
        tag_column=1,
    ),
    "xpos": TaskPreset(
        "xpos", TaskType.TOKEN_CLASSIFICATION, InputLayout.TAGGED, ("macro_f1", "accuracy"),
        FinetuneHyperparams(epochs=10, batch_size=16, warmup_steps=1000, learning_rate=4e-5),
        tag_column=2,
    ),
    "ner": TaskPreset(
        "ner", TaskType.TOKEN_CLASSIFICATION, InputLayout.TAGGED, ("ner",),
        FinetuneHyperparams(epochs=15, batch_size=16, warmup_steps=500, learning_rate=5e-5),
        tag_column=1,
    ),
    "sapn": TaskPreset(
        "sapn", TaskType.BINARY_CLASSIFICATION, InputLayout.PAIR, ("accuracy", "macro_f1"),
        FinetuneHyperparams(epochs=10, batch_size=16, warmup_steps=1000, learning_rate=3e-5),
    ),
    "sar": TaskPreset(
        "sar", TaskType.MULTICLASS_CLASSIFICATION, InputLayout.PAIR, ("accuracy", "macro_f1"),
        FinetuneHyperparams(epochs=10, batch_size=16, warmup_steps=1000, learning_rate=5e-5),
        num_labels=4,
    ),
    "di": TaskPreset(
        "di", TaskType.BINARY_CLASSIFICATION, InputLayout.SINGLE, ("macro_f1", "accuracy"),
        FinetuneHyperparams(epochs=5, batch_size=8, warmup_steps=1500, learning_rate=5e-5),
    ),
    "sts": TaskPreset(
        "sts", TaskType.PAIR_REGRESSION, InputLayout.PAIR, ("pearson", "spearman"),
        FinetuneHyperparams(
            early_stopping=EarlyStopping(metric="pearson", patience=3),
            batch_size=256, warmup_steps=0, learning_rate=2e-5,
        ),
    ),
}


def get_preset(name: str) -> TaskPreset:
    try:
        return TASK_PRESETS[name]
    except KeyError:
        valid = ", ".join(sorted(TASK_PRESETS))
        raise ConfigError(f"Unknown task {name!r}. Must be one of: {valid}") from None


def default_metrics(kind: TaskKind) -> tuple[str, ...]:
    if kind.type == TaskType.PAIR_REGRESSION:
        return ("pearson", "spearman")
    return ("accuracy", "macro_f1")


# ---------------------------------------------------------------------------
# Task model
# ---------------------------------------------------------------------------


@dataclass
class TaskModel:
    """An encoder with a task head on top; both are trained together."""

    encoder: EncoderModel
    head: TaskHead
    label_names: list[str] | None = None
    task: str | None = None

    @property
    def kind(self) -> TaskKind:
        return self.head.kind

    def parameters(self) -> dict[str, Tensor]:
        return {**self.encoder.params, **self.head.params}

    def train(self) -> TaskModel:
        self.encoder.train()
        return self

    def eval(self) -> TaskModel:
        self.encoder.eval()
        return self

    def scores(self, batch: EncodedBatch, training: bool | None = None) -> Tensor:
        output = forward(self.encoder, batch)
        return self.head.scores(output, self.encoder.training if training is None else training)

    def state(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.parameters().items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for name, p in self.parameters().items():
            p.data = state[name].copy()


def attach_head(
    model: EncoderModel,
    kind: TaskKind,
    seed: int = 42,
    dropout: float = 0.1,
    label_names: Sequence[str] | None = None,
    task: str | None = None,
) -> TaskModel:
    """Put a freshly initialised head for *kind* on *model*.

    The returned task model trains *model*'s parameters in place; pass a copy
    to keep the original.
    """
    if label_names is not None and kind.type != TaskType.PAIR_REGRESSION:
        width = 2 if kind.type == TaskType.BINARY_CLASSIFICATION else kind.num_labels
        if len(label_names) != width:
            raise ConfigError(f"{len(label_names)} label names for a {width}-way head")
    encoder = dataclasses.replace(model, seed=seed)
    head = get_head(kind, model.config.hidden, dropout, seed)
    return TaskModel(encoder, head, list(label_names) if label_names else None, task)


def save_task_model(task_model: TaskModel, path: str | Path, metadata: dict | None = None) -> None:
    """Checkpoint the encoder and head tensors together; the task goes in the header."""
    arrays = {name: p.data for name, p in task_model.parameters().items()}
    header = dict(metadata or {})
    header["task"] = {
        "name": task_model.task,
        "type": task_model.kind.type.value,
        "num_labels": task_model.kind.num_labels,
        "label_names": task_model.label_names,
        "dropout": task_model.head.dropout,
    }
    atomic_write_bytes(path, checkpoint_bytes(task_model.encoder.config, arrays, header))
    logger.info("Saved task model %s (%s).", path, task_model.kind.type)


def load_task_model(path: str | Path) -> TaskModel:
    config, arrays, metadata = read_checkpoint(path)
    task = metadata.get("task")
    if not isinstance(task, dict):
        raise FormatError(f"{path}: checkpoint has no task head")
    try:
        kind = TaskKind(TaskType(task["type"]), int(task["num_labels"]))
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: bad task header ({exc})") from exc
    encoder = model_from_arrays(config, arrays)
    task_model = attach_head(
        encoder, kind, dropout=float(task.get("dropout", 0.1)),
        label_names=task.get("label_names"), task=task.get("name"),
    )
    for name, p in task_model.head.params.items():
        if name not in arrays:
            raise FormatError(f"{path}: checkpoint is missing tensor {name!r}")
        if arrays[name].shape != p.shape:
            raise FormatError(f"{path}: tensor {name!r} has shape {arrays[name].shape}")
        p.data = arrays[name].copy()
    return task_model.eval()


# ---------------------------------------------------------------------------
# Features
# ---------------------------------------------------------------------------


@dataclass
class TaskFeatures:
    """Encoded inputs with training targets.

    Token tasks carry ``[rows, seq]`` targets and a weight mask that selects
    the first sub-token of every labelled word; sequence tasks carry one
    target per row.
    """

    example_ids: list[str]
    batch: EncodedBatch
    targets: np.ndarray
    kind: TaskKind
    weights: np.ndarray | None = None
    label_names: list[str] | None = None

    def __len__(self) -> int:
        return len(self.example_ids)

    def select(self, rows: Sequence[int] | np.ndarray) -> TaskFeatures:
        rows = np.asarray(rows, dtype=np.int64)
        return TaskFeatures(
            [self.example_ids[r] for r in rows],
            self.batch.select(rows),
            self.targets[rows],
            self.kind,
            None if self.weights is None else self.weights[rows],
            self.label_names,
        )

    @property
    def is_token_task(self) -> bool:
        return self.kind.type == TaskType.TOKEN_CLASSIFICATION

    def prediction_ids(self) -> list[str]:
        """One id per example, or ``<example>:<word>`` per labelled word for token tasks."""
        if not self.is_token_task:
            return list(self.example_ids)
        counts = self.weights.sum(axis=1).astype(int)
        return [f"{eid}:{w}" for eid, n in zip(self.example_ids, counts) for w in range(n)]

    def gold(self) -> np.ndarray:
        """Targets aligned with :meth:`prediction_ids`."""
        if self.is_token_task:
            return self.targets[self.weights > 0]
        return self.targets

    def words_per_example(self) -> list[int]:
        return [int(n) for n in self.weights.sum(axis=1)]


def _label_index(label_names: Sequence[str] | None) -> dict[str, int]:
    if not label_names:
        raise ConfigError("a classification task needs its label names")
    return {name: i for i, name in enumerate(label_names)}


def tagged_features(
    sentences: Sequence[TaggedSentence],
    vocab: Vocab,
    kind: TaskKind,
    label_names: Sequence[str] | None,
    max_len: int,
) -> TaskFeatures:
    """Label the first sub-token of every word; continuation pieces are ignored."""
    if not sentences:
        raise InputError("no sentences to encode")
    index = _label_index(label_names)
    encodings, targets, weights, dropped = [], [], [], 0
    for i, sentence in enumerate(sentences):
        ids: list[int] = []
        firsts: list[tuple[int, int]] = []
        unknown = next((tag for tag in sentence.tags if tag not in index), None)
        if unknown is not None:
            raise DataError(
                f"example {i} ({sentence.id}): label {unknown!r} is not in the label set"
            )
        for word, tag in zip(sentence.tokens, sentence.tags):
            pieces = vocab.convert_tokens_to_ids(tokenize(word, vocab) or [UNK])
            # The labelled words stay a prefix of the sentence.
            if len(ids) + len(pieces) > max_len - 2:
                break
            firsts.append((len(ids) + 1, index[tag]))
            ids.extend(pieces)
        dropped += len(sentence.tokens) - len(firsts)
        encodings.append(encode_token_ids(ids, None, vocab, max_len))
        row_targets = np.zeros(max_len, dtype=np.int64)
        row_weights = np.zeros(max_len)
        for position, label in firsts:
            row_targets[position] = label
            row_weights[position] = 1.0
        targets.append(row_targets)
        weights.append(row_weights)
    if dropped:
        logger.warning("%d word(s) did not fit in %d tokens and carry no label.", dropped, max_len)
    return TaskFeatures(
        [s.id for s in sentences],
        EncodedBatch.from_encodings(encodings),
        np.stack(targets),
        kind,
        np.stack(weights),
        list(label_names),
    )


def example_features(
    examples: Sequence[TextExample],
    vocab: Vocab,
    kind: TaskKind,
    label_names: Sequence[str] | None,
    max_len: int,
) -> TaskFeatures:
    """Encode single texts or pairs (segments 0/1) with one target each."""
    if not examples:
        raise InputError("no examples to encode")
    regression = kind.type == TaskType.PAIR_REGRESSION
    index = {} if regression else _label_index(label_names)
    encodings, targets = [], []
    for i, example in enumerate(examples):
        if regression:
            targets.append(parse_score(example, i))
        elif example.target not in index:
            raise DataError(
                f"example {i} ({example.id}): label {example.target!r} is not in the label set"
            )
        else:
            targets.append(index[example.target])
        ids_a = vocab.convert_tokens_to_ids(tokenize(example.text_a, vocab))
        ids_b = (
            None if example.text_b is None
            else vocab.convert_tokens_to_ids(tokenize(example.text_b, vocab))
        )
        encodings.append(encode_token_ids(ids_a, ids_b, vocab, max_len))
    dtype = np.float64 if regression else np.int64
    return TaskFeatures(
        [e.id for e in examples],
        EncodedBatch.from_encodings(encodings),
        np.array(targets, dtype=dtype),
        kind,
        None,
        None if regression else list(label_names),
    )


def _check_targets(features: TaskFeatures, kind: TaskKind) -> None:
    if features.kind != kind:
        raise ConfigError(f"features were built for {features.kind.type}, model is {kind.type}")
    if kind.type == TaskType.PAIR_REGRESSION:
        return
    width = 2 if kind.type == TaskType.BINARY_CLASSIFICATION else kind.num_labels
    targets = features.targets
    bad = (targets < 0) | (targets >= width)
    if features.weights is not None:
        bad &= features.weights > 0
    if bad.any():
        row = int(np.argwhere(bad)[0][0])
        raise DataError(
            f"example {row} ({features.example_ids[row]}): label outside [0, {width})"
        )


# ---------------------------------------------------------------------------
# Prediction and evaluation
# ---------------------------------------------------------------------------


def predict(
    task_model: TaskModel,
    features: TaskFeatures,
    workers: int = 1,
    batch_size: int = PREDICT_BATCH_SIZE,
) -> PredictionSet:
    """Deterministic outputs for every example (every labelled word for token tasks)."""
    if not len(features):
        raise InputError("nothing to predict")
    task_model.eval()
    chunks = [
        np.arange(start, min(start + batch_size, len(features)))
        for start in range(0, len(features), batch_size)
    ]

    def run(rows: np.ndarray) -> np.ndarray:
        # Worker threads have their own tape, so no_grad is entered per call.
        with no_grad():
            return task_model.scores(features.batch.select(rows), training=False).data

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(chunks))) as pool:
            outputs = list(pool.map(run, chunks))
    else:
        outputs = [run(rows) for rows in chunks]
    labels, values = task_model.head.readout(np.concatenate(outputs, axis=0))

    if labels is None:
        return PredictionSet(features.prediction_ids(), PredictionKind.REGRESSION, scalars=values)
    if features.is_token_task:
        mask = features.weights > 0
        labels, values = labels[mask], values[mask]
    return PredictionSet(
        features.prediction_ids(),
        PredictionKind.CLASSIFICATION,
        labels=labels,
        probabilities=values,
        label_names=task_model.label_names,
    )


def _correlation(fn: Callable, gold: np.ndarray, pred: np.ndarray, name: str) -> float:
    try:
        return fn(gold, pred)
    except UndefinedCorrelationError:
        logger.warning("%s is undefined for constant predictions; reporting NaN.", name)
        return float("nan")


def _ner_scores(predictions: PredictionSet, features: TaskFeatures) -> dict[str, float]:
    names = features.label_names
    gold, pred = features.gold(), predictions.labels
    docs, offset = [], 0
    for count in features.words_per_example():
        gold_tags = [names[i] for i in gold[offset:offset + count]]
        pred_tags = [names[i] for i in pred[offset:offset + count]]
        docs.append(NerDocument([""] * count, gold_tags, pred_tags))
        offset += count
    scores = ner_schema_eval(docs)
    result: dict[str, float] = {}
    for schema in Schema:
        r = scores.schemas[schema]
        result[f"{schema}_precision"] = r.precision
        result[f"{schema}_recall"] = r.recall
        result[f"{schema}_f1"] = r.f1
        result[f"{schema}_macro_f1"] = scores.macro_f1(schema)
    return result


def score_predictions(
    predictions: PredictionSet,
    features: TaskFeatures,
    metrics: Sequence[str],
) -> dict[str, float]:
    """Compare *predictions* with the gold targets of *features*."""
    predictions = predictions.reorder(features.prediction_ids())
    gold = features.gold()
    result: dict[str, float] = {}
    for name in metrics:
        if name == "accuracy":
            result[name] = accuracy(gold, predictions.labels)
        elif name == "macro_f1":
            result[name] = macro_f1(gold, predictions.labels, predictions.num_classes)
        elif name == "pearson":
            result[name] = _correlation(pearson, gold, predictions.scalars, name)
        elif name == "spearman":
            result[name] = _correlation(spearman, gold, predictions.scalars, name)
        elif name == "ner":
            result.update(_ner_scores(predictions, features))
        else:
            raise ConfigError(f"Unknown metric {name!r}")
    return result


def evaluate(
    task_model: TaskModel,
    features: TaskFeatures,
    metrics: Sequence[str] | None = None,
    workers: int = 1,
) -> dict[str, float]:
    metrics = tuple(metrics or default_metrics(task_model.kind))
    return score_predictions(predict(task_model, features, workers), features, metrics)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class EarlyStopper:
    """Tracks the best dev score and a snapshot of the parameters that reached it."""

    policy: EarlyStopping
    best: float = -math.inf
    best_epoch: int = 0
    stale: int = 0
    snapshot: dict[str, np.ndarray] | None = field(default=None, repr=False)

    def update(self, value: float, task_model: TaskModel, epoch: int) -> bool:
        """Record one evaluation; returns True when training should stop."""
        if math.isfinite(value) and value > self.best:
            self.best, self.best_epoch, self.stale = value, epoch, 0
            self.snapshot = task_model.state()
            return False
        self.stale += 1
        return self.stale >= self.policy.patience

    def restore(self, task_model: TaskModel) -> None:
        if self.snapshot is not None:
            task_model.load_state(self.snapshot)


@dataclass
class FinetuneResult:
    task_model: TaskModel
    dev_metrics: dict[str, float]
    history: list[dict[str, float]]
    best_epoch: int | None = None


def finetune(
    task_model: TaskModel,
    train: TaskFeatures,
    dev: TaskFeatures | None,
    hp: FinetuneHyperparams,
    *,
    metrics: Sequence[str] | None = None,
) -> FinetuneResult:
    """Train encoder and head with AdamW and linear warmup then decay to 0.

    With ``hp.early_stopping`` the dev metric is checked after every epoch and
    the best parameters are restored at the end.
    """
    errors = hp.validate()
    if errors:
        raise ConfigError(errors)
    if not len(train):
        raise InputError("cannot fine-tune on an empty training set")
    _check_targets(train, task_model.kind)
    if dev is not None:
        _check_targets(dev, task_model.kind)
    metrics = tuple(metrics or default_metrics(task_model.kind))
    stopping = hp.early_stopping
    if stopping is not None and dev is None:
        raise ConfigError("early stopping needs a dev set")

    epochs = hp.epochs if hp.epochs is not None else stopping.max_epochs
    steps_per_epoch = math.ceil(len(train) / hp.batch_size)
    schedule = LinearSchedule(hp.learning_rate, epochs * steps_per_epoch, hp.warmup_steps)
    optimizer = AdamW(
        task_model.parameters(), lr=hp.learning_rate, weight_decay=hp.weight_decay
    )
    rng = np.random.default_rng([hp.seed, 4])
    stopper = EarlyStopper(stopping) if stopping is not None else None
    history: list[dict[str, float]] = []
    logger.info(
        "Fine-tuning %s for up to %d epoch(s) on %d example(s).",
        task_model.kind.type, epochs, len(train),
    )

    step = 0
    task_model.train()
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(train))
        losses = []
        for start in range(0, len(train), hp.batch_size):
            part = train.select(order[start:start + hp.batch_size])
            current_tape().clear()
            optimizer.zero_grad()
            scores = task_model.scores(part.batch, training=True)
            loss = task_model.head.loss(scores, part.targets, part.weights)
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingDivergedError(f"non-finite task loss ({value}) at step {step}")
            if loss.requires_grad:
                backward(loss)
            optimizer.step(schedule.lr_at(step))
            losses.append(value)
            step += 1

        record = {"epoch": float(epoch), "train_loss": float(np.mean(losses))}
        if dev is not None:
            record.update(evaluate(task_model, dev, metrics))
            task_model.train()
        history.append(record)
        logger.debug("epoch %d: %s", epoch, record)
        if stopper is not None:
            if stopping.metric not in record:
                raise ConfigError(
                    f"early stopping metric {stopping.metric!r} is not among {list(record)}"
                )
            if stopper.update(record[stopping.metric], task_model, epoch):
                logger.info("Early stopping after epoch %d (best %d).", epoch, stopper.best_epoch)
                break

    if stopper is not None:
        stopper.restore(task_model)
    task_model.eval()
    current_tape().clear()
    dev_metrics = evaluate(task_model, dev, metrics) if dev is not None else {}
    return FinetuneResult(
        task_model, dev_metrics, history, stopper.best_epoch if stopper else None
    )


@dataclass
class SeedSummary:
    """Dev metrics of repeated runs with their mean and population standard deviation."""

    seeds: list[int]
    runs: list[dict[str, float]]
    mean: dict[str, float]
    std: dict[str, float]

    def to_dict(self) -> dict:
        return {"seeds": self.seeds, "runs": self.runs, "mean": self.mean, "std": self.std}


def run_seeds(
    build: Callable[[int], TaskModel],
    train: TaskFeatures,
    dev: TaskFeatures,
    hp: FinetuneHyperparams,
    seeds: Sequence[int],
    *,
    metrics: Sequence[str] | None = None,
) -> SeedSummary:
    """Fine-tune a fresh task model per seed and aggregate the dev metrics."""
    if not seeds:
        raise ConfigError("run_seeds needs at least one seed")
    if dev is None:
        raise ConfigError("run_seeds needs a dev set to report metrics")
    runs = []
    for seed in seeds:
        result = finetune(
            build(seed), train, dev, dataclasses.replace(hp, seed=seed), metrics=metrics
        )
        runs.append(result.dev_metrics)
        logger.info("Seed %d: %s", seed, result.dev_metrics)
    keys = list(runs[0])
    mean = {k: float(np.mean([r[k] for r in runs])) for k in keys}
    std = {k: float(np.std([r[k] for r in runs])) for k in keys}
    return SeedSummary(list(seeds), runs, mean, std)


__all__ = [
    "TASK_PRESETS",
    "EarlyStopper",
    "FinetuneResult",
    "InputLayout",
    "SeedSummary",
    "TaskFeatures",
    "TaskModel",
    "TaskPreset",
    "attach_head",
    "default_metrics",
    "evaluate",
    "example_features",
    "finetune",
    "get_preset",
    "load_task_model",
    "predict",
    "run_seeds",
    "save_task_model",
    "score_predictions",
    "tagged_features",
]
