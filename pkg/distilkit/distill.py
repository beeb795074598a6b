"""Student initialisation, MLM masking, the distillation losses and the training loop."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import warnings
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import DistillConfig
from .encoder import EncodedBatch, EncoderModel, EncoderOutput, forward, mlm_logits
from .errors import (
    ConfigError,
    DimensionError,
    InputError,
    NoSupervisedPositionsWarning,
    TrainingDivergedError,
)
from .fileio import atomic_open
from .numerics import (
    AdamW,
    LinearSchedule,
    Tensor,
    backward,
    clip_grad_norm,
    cosine_similarity,
    cross_entropy,
    current_tape,
    no_grad,
    softmax_np,
)
from .tokenizer import Encoding, Vocab, encode_token_ids, tokenize

logger = logging.getLogger(__name__)

__all__ = [
    "DistillConfig",
    "DistillResult",
    "EnsembleLosses",
    "LossDiagnostics",
    "LossParts",
    "MaskedBatch",
    "StepMetrics",
    "cos_align_loss",
    "encode_lines",
    "ensemble_losses",
    "init_student",
    "kd_loss",
    "mask_batch",
    "mlm_loss",
    "pack_token_stream",
    "pretrain_mlm",
    "teacher_outputs",
    "total_loss",
    "train_distill",
]

MASK_TOKEN_SHARE = 0.8
RANDOM_TOKEN_SHARE = 0.1
METRICS_HEADER = ("step", "lr", "L_KD", "L_MLM", "L_COS", "total", "grad_norm")


@dataclass
class LossDiagnostics:
    """Counters for degenerate inputs met while computing losses."""

    zero_vector_positions: int = 0
    empty_kd_batches: int = 0


# ---------------------------------------------------------------------------
# Student initialisation
# ---------------------------------------------------------------------------


def init_student(
    teacher: EncoderModel,
    student_layers: int,
    student_config=None,
) -> EncoderModel:
    """Build a student from every other teacher layer (0, 2, 4, ...).

    Embeddings, pooler and MLM head are copied unchanged. When *student_config*
    is given it must agree with the teacher on everything but the layer count.
    """
    cfg = teacher.config
    if student_layers < 1 or 2 * student_layers > cfg.num_layers:
        raise ConfigError(
            f"cannot take {student_layers} alternating layer(s) from a "
            f"{cfg.num_layers}-layer teacher"
        )
    target = dataclasses.replace(cfg, num_layers=student_layers)
    if student_config is not None:
        mismatched = [
            name
            for name in ("hidden", "num_heads", "vocab_size", "intermediate", "max_position",
                         "type_vocab")
            if getattr(student_config, name) != getattr(cfg, name)
        ]
        if mismatched:
            details = ", ".join(
                f"{n} {getattr(cfg, n)} vs {getattr(student_config, n)}" for n in mismatched
            )
            raise ConfigError(f"student and teacher configs differ: {details}")
        target = dataclasses.replace(student_config, num_layers=student_layers)

    params: dict[str, Tensor] = {}
    for name, tensor in teacher.params.items():
        if name.startswith("layers."):
            continue
        params[name] = Tensor(tensor.data.copy(), requires_grad=True, name=name)
    for j in range(student_layers):
        for suffix, tensor in teacher.layer_params(2 * j).items():
            name = f"layers.{j}.{suffix}"
            params[name] = Tensor(tensor.data.copy(), requires_grad=True, name=name)
    logger.info(
        "Initialised %d-layer student from %d-layer teacher.", student_layers, cfg.num_layers
    )
    return EncoderModel(target, params, training=False, seed=teacher.seed)


# ---------------------------------------------------------------------------
# Masking
# ---------------------------------------------------------------------------


@dataclass
class MaskedBatch:
    """A batch after MLM corruption; ``supervised`` marks the selected positions."""

    input_ids: np.ndarray
    original_ids: np.ndarray
    supervised: np.ndarray
    attention_mask: np.ndarray
    segment_ids: np.ndarray

    @property
    def batch(self) -> EncodedBatch:
        return EncodedBatch(self.input_ids, self.attention_mask, self.segment_ids)

    @property
    def num_supervised(self) -> int:
        return int(self.supervised.sum())


def mask_batch(
    batch: EncodedBatch,
    vocab: Vocab,
    mask_fraction: float,
    rng: np.random.Generator,
) -> MaskedBatch:
    """Select real tokens with probability *mask_fraction*; corrupt them 80/10/10."""
    if not 0.0 <= mask_fraction < 1.0:
        raise ConfigError(f"mask_fraction must lie in [0, 1), got {mask_fraction}")
    ids = batch.input_ids
    special = np.isin(ids, [vocab.cls_id, vocab.sep_id, vocab.pad_id])
    real = (batch.attention_mask == 1) & ~special
    selected = real & (rng.random(ids.shape) < mask_fraction)
    action = rng.random(ids.shape)
    to_mask = selected & (action < MASK_TOKEN_SHARE)
    to_random = selected & (action >= MASK_TOKEN_SHARE) & (
        action < MASK_TOKEN_SHARE + RANDOM_TOKEN_SHARE
    )
    corrupted = ids.copy()
    corrupted[to_mask] = vocab.mask_id
    corrupted[to_random] = rng.integers(0, len(vocab), size=int(to_random.sum()))
    return MaskedBatch(
        input_ids=corrupted,
        original_ids=ids.copy(),
        supervised=selected,
        attention_mask=batch.attention_mask,
        segment_ids=batch.segment_ids,
    )


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------


def _values(x: Tensor | np.ndarray) -> np.ndarray:
    return x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)


def kd_loss(
    teacher_logits: Tensor | np.ndarray,
    student_logits: Tensor,
    supervised_mask: np.ndarray,
    temperature: float,
    diagnostics: LossDiagnostics | None = None,
) -> Tensor:
    """``T² · mean over supervised positions of −Σ_i t_i log s_i`` at temperature T.

    The teacher side is a constant. Without supervised positions the loss is
    zero and a :class:`NoSupervisedPositionsWarning` is issued.
    """
    teacher = _values(teacher_logits)
    if teacher.shape != student_logits.shape:
        raise DimensionError(
            f"kd_loss: teacher logits {teacher.shape} vs student logits {student_logits.shape}"
        )
    supervised = np.asarray(supervised_mask, dtype=bool)
    if not supervised.any():
        warnings.warn(
            "kd_loss called on a batch without supervised positions",
            NoSupervisedPositionsWarning,
            stacklevel=2,
        )
        if diagnostics is not None:
            diagnostics.empty_kd_batches += 1
        return Tensor(0.0)
    targets = softmax_np(teacher, temperature)
    loss = cross_entropy(
        student_logits, targets, weights=supervised.astype(np.float64), temperature=temperature
    )
    return loss * (temperature * temperature)


def mlm_loss(
    student_logits: Tensor,
    original_ids: np.ndarray,
    supervised_mask: np.ndarray,
) -> Tensor:
    """Cross-entropy against the uncorrupted ids at supervised positions."""
    return cross_entropy(
        student_logits,
        np.asarray(original_ids, dtype=np.int64),
        weights=np.asarray(supervised_mask, dtype=np.float64),
    )


def cos_align_loss(
    teacher_hidden: Tensor | np.ndarray,
    student_hidden: Tensor,
    attention_mask: np.ndarray,
    diagnostics: LossDiagnostics | None = None,
) -> Tensor:
    """Mean of ``1 − cos(h_t, h_s)`` over real positions.

    A zero vector at a real position scores cosine 0 (so contributes 1) and is
    counted in *diagnostics*.
    """
    teacher = Tensor(_values(teacher_hidden))
    if teacher.shape != student_hidden.shape:
        raise DimensionError(
            f"cos_align_loss: teacher hidden {teacher.shape} vs student {student_hidden.shape}"
        )
    real = np.asarray(attention_mask, dtype=np.float64)
    cos, degenerate = cosine_similarity(teacher, student_hidden)
    zero_vectors = int((degenerate & (real > 0)).sum())
    if zero_vectors:
        logger.warning("cos_align_loss: %d real position(s) hold a zero vector.", zero_vectors)
        if diagnostics is not None:
            diagnostics.zero_vector_positions += zero_vectors
    count = real.sum()
    if count == 0:
        return Tensor(0.0)
    return ((1.0 - cos) * real).sum() * (1.0 / count)


@dataclass
class LossParts:
    kd: Tensor | float
    mlm: Tensor | float
    cos: Tensor | float

    def values(self) -> dict[str, float]:
        return {
            "L_KD": _scalar(self.kd),
            "L_MLM": _scalar(self.mlm),
            "L_COS": _scalar(self.cos),
        }


def _scalar(x: Tensor | float) -> float:
    return x.item() if isinstance(x, Tensor) else float(x)


def _check_lambdas(config: DistillConfig) -> None:
    errors = [e for e in config.validate() if "lambda" in e or "loss weights" in e]
    if errors:
        raise ConfigError(errors)


def total_loss(parts: LossParts, config: DistillConfig) -> Tensor:
    """``λ_KD·L_KD + λ_MLM·L_MLM + λ_COS·L_COS``."""
    _check_lambdas(config)
    kd = parts.kd if isinstance(parts.kd, Tensor) else Tensor(parts.kd)
    return kd * config.lambda_kd + parts.mlm * config.lambda_mlm + parts.cos * config.lambda_cos


@dataclass
class EnsembleLosses:
    kd: Tensor
    cos: Tensor
    per_teacher: list[tuple[float, float]] = field(default_factory=list)


def _frozen_forward(teacher: EncoderModel, batch: EncodedBatch) -> tuple[np.ndarray, np.ndarray]:
    # Runs on worker threads too; each thread owns its tape.
    with no_grad():
        out = forward(teacher, batch)
        logits = mlm_logits(teacher, out.last_hidden)
    return logits.data, out.last_hidden.data


def teacher_outputs(
    teachers: Sequence[EncoderModel],
    batch: EncodedBatch,
    workers: int = 1,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """(MLM logits, final hidden states) of every frozen teacher, in teacher order."""
    if workers > 1 and len(teachers) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(teachers))) as pool:
            return list(pool.map(lambda t: _frozen_forward(t, batch), teachers))
    return [_frozen_forward(t, batch) for t in teachers]


def _check_compatible(teachers: Sequence[EncoderModel], student: EncoderModel) -> None:
    for index, teacher in enumerate(teachers):
        if teacher.config.vocab_size != student.config.vocab_size:
            raise ConfigError(
                f"teacher {index} has vocab_size {teacher.config.vocab_size}, "
                f"student has {student.config.vocab_size}; teachers must share the vocabulary"
            )
        if teacher.config.hidden != student.config.hidden:
            raise ConfigError(
                f"teacher {index} has hidden {teacher.config.hidden}, "
                f"student has {student.config.hidden}"
            )


def ensemble_losses(
    teachers: Sequence[EncoderModel],
    student: EncoderModel,
    masked: MaskedBatch,
    temperature: float,
    *,
    student_output: EncoderOutput | None = None,
    student_logits: Tensor | None = None,
    diagnostics: LossDiagnostics | None = None,
    workers: int = 1,
) -> EnsembleLosses:
    """Equal-weight average of per-teacher KD and cosine losses."""
    if not teachers:
        raise ConfigError("ensemble_losses needs at least one teacher")
    _check_compatible(teachers, student)
    if student_output is None:
        student_output = forward(student, masked.batch)
    if student_logits is None:
        student_logits = mlm_logits(student, student_output.last_hidden)

    kd_terms: list[Tensor] = []
    cos_terms: list[Tensor] = []
    for t_logits, t_hidden in teacher_outputs(teachers, masked.batch, workers):
        kd_terms.append(
            kd_loss(t_logits, student_logits, masked.supervised, temperature, diagnostics)
        )
        cos_terms.append(
            cos_align_loss(
                t_hidden, student_output.last_hidden, masked.attention_mask, diagnostics
            )
        )
    if len(teachers) == 1:
        kd, cos = kd_terms[0], cos_terms[0]
    else:
        scale = 1.0 / len(teachers)
        kd = sum(kd_terms[1:], kd_terms[0]) * scale
        cos = sum(cos_terms[1:], cos_terms[0]) * scale
    per_teacher = [(k.item(), c.item()) for k, c in zip(kd_terms, cos_terms)]
    return EnsembleLosses(kd=kd, cos=cos, per_teacher=per_teacher)


# ---------------------------------------------------------------------------
# Corpus preparation
# ---------------------------------------------------------------------------


def encode_lines(lines: Iterable[str], vocab: Vocab, max_len: int) -> list[Encoding]:
    """One single-segment example per non-blank line."""
    return [
        encode_token_ids(vocab.convert_tokens_to_ids(tokenize(line, vocab)), None, vocab, max_len)
        for line in lines
        if line.strip()
    ]


def pack_token_stream(token_ids: Sequence[int], vocab: Vocab, max_len: int) -> list[Encoding]:
    """Cut a flat token-id stream into consecutive ``max_len`` examples."""
    width = max_len - 2
    if width < 1:
        raise ConfigError(f"max_len must be at least 3, got {max_len}")
    return [
        encode_token_ids(list(token_ids[i:i + width]), None, vocab, max_len)
        for i in range(0, len(token_ids), width)
    ]


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepMetrics:
    step: int
    lr: float
    kd: float
    mlm: float
    cos: float
    total: float
    grad_norm: float

    def row(self) -> tuple:
        return (
            self.step, self.lr, self.kd, self.mlm, self.cos, self.total, self.grad_norm
        )


@dataclass
class DistillResult:
    student: EncoderModel
    metrics: list[StepMetrics]
    diagnostics: LossDiagnostics


def write_metrics_csv(metrics: Sequence[StepMetrics], path: str | Path) -> None:
    with atomic_open(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        for m in metrics:
            writer.writerow(m.row())


def _check_finite(parts: dict[str, float], total: float, step: int) -> None:
    for name, value in {**parts, "total": total}.items():
        if not math.isfinite(value):
            raise TrainingDivergedError(f"non-finite {name} loss ({value}) at step {step}")


def train_distill(
    teachers: Sequence[EncoderModel],
    student: EncoderModel,
    corpus: Sequence[Encoding],
    config: DistillConfig,
    vocab: Vocab,
    *,
    metrics_path: str | Path | None = None,
    workers: int = 1,
) -> DistillResult:
    """Distil *teachers* into *student* on the encoded *corpus*.

    AdamW with decoupled weight decay, linear warmup then linear decay to 0,
    global gradient clipping before every step. Teachers are frozen.
    """
    errors = config.validate()
    if errors:
        raise ConfigError(errors)
    if not corpus:
        raise InputError("cannot train on an empty corpus")
    if not teachers and (config.lambda_kd or config.lambda_cos):
        raise ConfigError("lambda_kd and lambda_cos must be 0 when training without teachers")
    _check_compatible(teachers, student)
    if student.config.vocab_size != len(vocab):
        raise ConfigError(
            f"vocabulary has {len(vocab)} tokens, model expects {student.config.vocab_size}"
        )

    data = EncodedBatch.from_encodings(corpus)
    for teacher in teachers:
        teacher.freeze().eval()
    student.train()

    steps_per_epoch = math.ceil(len(data) / config.batch_size)
    total_steps = config.epochs * steps_per_epoch
    schedule = LinearSchedule.from_fraction(
        config.learning_rate, total_steps, config.warmup_fraction
    )
    optimizer = AdamW(
        student.params, lr=config.learning_rate, weight_decay=config.weight_decay
    )
    rng = np.random.default_rng(config.seed)
    diagnostics = LossDiagnostics()
    metrics: list[StepMetrics] = []
    logger.info(
        "Training for %d step(s): %d example(s), %d teacher(s).",
        total_steps, len(data), len(teachers),
    )

    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(len(data))
        for start in range(0, len(data), config.batch_size):
            current_tape().clear()
            optimizer.zero_grad()
            masked = mask_batch(
                data.select(order[start:start + config.batch_size]),
                vocab, config.mask_fraction, rng,
            )
            out = forward(student, masked.batch)
            logits = mlm_logits(student, out.last_hidden)
            mlm = mlm_loss(logits, masked.original_ids, masked.supervised)
            if teachers:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", NoSupervisedPositionsWarning)
                    ens = ensemble_losses(
                        teachers, student, masked, config.temperature,
                        student_output=out, student_logits=logits,
                        diagnostics=diagnostics, workers=workers,
                    )
                parts = LossParts(kd=ens.kd, mlm=mlm, cos=ens.cos)
            else:
                parts = LossParts(kd=0.0, mlm=mlm, cos=0.0)
            loss = total_loss(parts, config)
            values = parts.values()
            _check_finite(values, loss.item(), step)

            if loss.requires_grad:
                backward(loss)
                trained = [p for p in student.params.values() if p.grad is not None]
                grad_norm = clip_grad_norm(trained, config.clip_norm)
            else:
                grad_norm = 0.0
            lr = schedule.lr_at(step)
            optimizer.step(lr)
            metrics.append(
                StepMetrics(
                    step, lr, values["L_KD"], values["L_MLM"], values["L_COS"],
                    loss.item(), grad_norm,
                )
            )
            logger.debug(
                "step %d lr=%.3g kd=%.4f mlm=%.4f cos=%.4f total=%.4f |g|=%.3f",
                step, lr, values["L_KD"], values["L_MLM"], values["L_COS"], loss.item(),
                grad_norm,
            )
            step += 1
        logger.info("Epoch %d/%d done, last total loss %.4f.", epoch + 1, config.epochs,
                    metrics[-1].total)

    student.eval()
    current_tape().clear()
    if metrics_path is not None:
        write_metrics_csv(metrics, metrics_path)
    return DistillResult(student=student, metrics=metrics, diagnostics=diagnostics)


def pretrain_mlm(
    model: EncoderModel,
    corpus: Sequence[Encoding],
    config: DistillConfig,
    vocab: Vocab,
    **kwargs,
) -> DistillResult:
    """Train with the masked-language-model loss alone."""
    mlm_only = dataclasses.replace(config, lambda_kd=0.0, lambda_mlm=1.0, lambda_cos=0.0)
    return train_distill([], model, corpus, mlm_only, vocab, **kwargs)
