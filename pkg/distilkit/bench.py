"""Forward-pass latency over random inputs of graded sequence lengths."""

from __future__ import annotations

import csv
import logging
import time
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .config import DEFAULT_LENGTHS, DEFAULT_SEED, BenchSettings
from .encoder import EncodedBatch, EncoderModel, forward
from .errors import ConfigError, DistilkitError
from .fileio import atomic_open
from .models import BenchRow, LatencyStats
from .numerics import no_grad

logger = logging.getLogger(__name__)

CSV_HEADER = (
    "model", "label", "length", "reps", "median_ms", "mean_ms", "stddev_ms", "threads",
)
MIN_REPS = 3
FLAKY_SPREAD = 0.5


@dataclass
class BenchModel:
    name: str
    model: EncoderModel
    label: str = ""

    def __post_init__(self) -> None:
        if not self.label:
            cfg = self.model.config
            self.label = f"{cfg.num_layers}L-{cfg.hidden}H"


@dataclass
class BenchPlan:
    """Models to compare and the protocol to time them with."""

    models: list[BenchModel]
    lengths: tuple[int, ...] = DEFAULT_LENGTHS
    batch_size: int = 1
    reps: int = 10
    warmup: int = 2
    seed: int = DEFAULT_SEED
    threads: int = 1

    @classmethod
    def from_settings(
        cls, models: list[BenchModel], settings: BenchSettings, threads: int = 1
    ) -> BenchPlan:
        return cls(
            models,
            lengths=tuple(settings.lengths),
            batch_size=settings.batch_size,
            reps=settings.reps,
            warmup=settings.warmup,
            seed=settings.seed,
            threads=threads,
        )

    def validate(self) -> list[str]:
        errors: list[str] = []
        if not self.models:
            errors.append("a benchmark plan needs at least one model")
        if not self.lengths:
            errors.append("a benchmark plan needs at least one sequence length")
        if any(n < 1 for n in self.lengths):
            errors.append(f"sequence lengths must be positive, got {list(self.lengths)}")
        if self.reps < MIN_REPS:
            errors.append(f"reps must be at least {MIN_REPS}, got {self.reps}")
        if self.warmup < 0:
            errors.append(f"warmup must be non-negative, got {self.warmup}")
        if self.batch_size < 1:
            errors.append(f"batch_size must be at least 1, got {self.batch_size}")
        if self.threads < 1:
            errors.append(f"threads must be at least 1, got {self.threads}")
        for entry in self.models:
            longest = max(self.lengths, default=0)
            if longest > entry.model.config.max_position:
                errors.append(
                    f"{entry.name}: length {longest} exceeds max_position "
                    f"{entry.model.config.max_position}"
                )
        return errors


def random_batch(
    model: EncoderModel, length: int, batch_size: int, seed: int
) -> EncodedBatch:
    rng = np.random.default_rng([seed, length])
    shape = (batch_size, length)
    return EncodedBatch(
        input_ids=rng.integers(0, model.config.vocab_size, size=shape),
        attention_mask=np.ones(shape, dtype=np.int64),
        segment_ids=np.zeros(shape, dtype=np.int64),
    )


def latency_stats(samples_ms: Sequence[float]) -> LatencyStats:
    samples = np.asarray(samples_ms, dtype=np.float64)
    return LatencyStats(
        samples_ms=tuple(float(s) for s in samples),
        median_ms=float(np.median(samples)),
        mean_ms=float(samples.mean()),
        stddev_ms=float(samples.std()),
    )


def time_forward(
    model: EncoderModel,
    length: int,
    reps: int = 10,
    warmup: int = 2,
    seed: int = DEFAULT_SEED,
    batch_size: int = 1,
) -> LatencyStats:
    """Run *warmup* untimed then *reps* timed forward passes on a seeded random batch."""
    if length > model.config.max_position:
        raise ConfigError(
            f"length {length} exceeds the model's max_position {model.config.max_position}"
        )
    if reps < 1:
        raise ConfigError(f"reps must be at least 1, got {reps}")
    model.eval()
    batch = random_batch(model, length, batch_size, seed)
    samples = []
    with no_grad():
        for _ in range(warmup):
            forward(model, batch)
        for _ in range(reps):
            start = time.perf_counter()
            forward(model, batch)
            samples.append((time.perf_counter() - start) * 1000.0)
    return latency_stats(samples)


def run_plan(plan: BenchPlan) -> list[BenchRow]:
    """One row per (model, length), models in plan order, lengths ascending.

    BLAS kernels are limited to ``plan.threads`` threads while timing; every row
    records that count.
    """
    errors = plan.validate()
    if errors:
        raise ConfigError(errors)
    with threadpool_limits(limits=plan.threads, user_api="blas"):
        return _time_models(plan)


def _time_models(plan: BenchPlan) -> list[BenchRow]:
    rows: list[BenchRow] = []
    for entry in plan.models:
        for length in sorted(plan.lengths):
            try:
                stats = time_forward(
                    entry.model, length, plan.reps, plan.warmup, plan.seed, plan.batch_size
                )
            except DistilkitError as exc:
                raise ConfigError(f"{entry.name} at length {length}: {exc}") from exc
            if stats.median_ms > 0 and stats.stddev_ms / stats.median_ms >= FLAKY_SPREAD:
                logger.warning(
                    "%s at length %d: stddev %.2f ms is over half the median %.2f ms.",
                    entry.name, length, stats.stddev_ms, stats.median_ms,
                )
            logger.info("%s length %d: median %.3f ms", entry.name, length, stats.median_ms)
            rows.append(BenchRow(entry.name, entry.label, length, stats, plan.threads))
    return rows


def write_csv(rows: Sequence[BenchRow], path: str | Path) -> None:
    with atomic_open(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            record = row.to_dict()
            writer.writerow([record[column] for column in CSV_HEADER])


def write_plot_data(rows: Sequence[BenchRow], path: str | Path) -> None:
    """Whitespace-separated ``length`` column plus one median column per model."""
    models = list(dict.fromkeys(row.model for row in rows))
    lengths = sorted({row.length for row in rows})
    medians = {(row.model, row.length): row.stats.median_ms for row in rows}
    with atomic_open(path) as fh:
        fh.write("# length " + " ".join(models) + "\n")
        for length in lengths:
            values = [
                f"{medians[(m, length)]:.6f}" if (m, length) in medians else "nan"
                for m in models
            ]
            fh.write(f"{length} " + " ".join(values) + "\n")
