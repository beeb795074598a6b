"""Load distilkit configuration from distilkit.toml and environment variables."""

from __future__ import annotations

import dataclasses
import os
import tomllib
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import CleaningRules
from .errors import ConfigError, FormatError

DEFAULT_CONFIG_FILE = "distilkit.toml"
DEFAULT_SEED = 42
DEFAULT_LENGTHS = (16, 32, 64, 128, 256, 512)
LAMBDA_TOLERANCE = 1e-12
_MAX_CONFIG_SIZE = 1_000_000  # 1 MB sanity limit


@dataclass(frozen=True)
class DistillConfig:
    """Loss weights, temperature and optimisation settings of a distillation run."""

    lambda_kd: float = 0.625
    lambda_mlm: float = 0.25
    lambda_cos: float = 0.125
    temperature: float = 2.0
    epochs: int = 3
    batch_size: int = 256
    learning_rate: float = 5e-4
    weight_decay: float = 1e-4
    warmup_fraction: float = 0.05
    clip_norm: float = 5.0
    mask_fraction: float = 0.15
    max_len: int = 128
    seed: int = DEFAULT_SEED

    @property
    def lambdas(self) -> tuple[float, float, float]:
        return (self.lambda_kd, self.lambda_mlm, self.lambda_cos)

    def validate(self) -> list[str]:
        errors = _type_errors(self)
        if errors:
            return errors
        if any(w < 0 for w in self.lambdas):
            errors.append(f"loss weights must be non-negative, got {self.lambdas}")
        if abs(sum(self.lambdas) - 1.0) > LAMBDA_TOLERANCE:
            errors.append(
                f"lambda_kd + lambda_mlm + lambda_cos must equal 1, got {sum(self.lambdas):.6g}"
            )
        if not self.temperature > 0:
            errors.append(f"temperature must be positive, got {self.temperature}")
        for name in ("epochs", "batch_size", "max_len"):
            if getattr(self, name) < 1:
                errors.append(f"{name} must be at least 1, got {getattr(self, name)}")
        if self.max_len < 3:
            errors.append(f"max_len must be at least 3, got {self.max_len}")
        if not self.learning_rate > 0:
            errors.append(f"learning_rate must be positive, got {self.learning_rate}")
        if self.weight_decay < 0:
            errors.append(f"weight_decay must be non-negative, got {self.weight_decay}")
        if not 0.0 <= self.warmup_fraction < 1.0:
            errors.append(f"warmup_fraction must lie in [0, 1), got {self.warmup_fraction}")
        if not self.clip_norm > 0:
            errors.append(f"clip_norm must be positive, got {self.clip_norm}")
        if not 0.0 < self.mask_fraction < 1.0:
            errors.append(f"mask_fraction must lie in (0, 1), got {self.mask_fraction}")
        return errors


@dataclass(frozen=True)
class EarlyStopping:
    """Stop after ``patience`` dev evaluations without improvement of ``metric``."""

    metric: str = "pearson"
    patience: int = 3
    max_epochs: int = 50


@dataclass(frozen=True)
class FinetuneHyperparams:
    """Either a fixed epoch count or an early-stopping policy, never both."""

    epochs: int | None = None
    early_stopping: EarlyStopping | None = None
    batch_size: int = 16
    warmup_steps: int = 0
    learning_rate: float = 5e-5
    weight_decay: float = 0.0
    dropout: float = 0.1
    max_len: int = 128
    seed: int = DEFAULT_SEED

    def validate(self) -> list[str]:
        errors: list[str] = []
        if (self.epochs is None) == (self.early_stopping is None):
            errors.append("exactly one of epochs and early_stopping must be set")
        if self.epochs is not None and self.epochs < 1:
            errors.append(f"epochs must be at least 1, got {self.epochs}")
        if self.early_stopping is not None:
            if self.early_stopping.patience < 1:
                errors.append("early_stopping.patience must be a positive integer")
            if self.early_stopping.max_epochs < 1:
                errors.append("early_stopping.max_epochs must be a positive integer")
        if self.batch_size < 1:
            errors.append(f"batch_size must be at least 1, got {self.batch_size}")
        if self.warmup_steps < 0:
            errors.append(f"warmup_steps must be non-negative, got {self.warmup_steps}")
        if not self.learning_rate > 0:
            errors.append(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.dropout < 1.0:
            errors.append(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.max_len < 3:
            errors.append(f"max_len must be at least 3, got {self.max_len}")
        return errors

    def with_overrides(self, overrides: dict) -> FinetuneHyperparams:
        """Apply a ``[finetune.<task>]`` table; ``patience`` switches to early stopping."""
        overrides = dict(overrides)
        unknown = set(overrides) - {f.name for f in dataclasses.fields(self)} - {
            "patience", "metric", "max_epochs"
        }
        if unknown:
            raise ConfigError(f"unknown finetune keys: {', '.join(sorted(unknown))}")
        stopping = {k: overrides.pop(k) for k in ("patience", "metric", "max_epochs")
                    if k in overrides}
        overrides.pop("early_stopping", None)
        result = dataclasses.replace(self, **overrides)
        if stopping:
            base = result.early_stopping or EarlyStopping()
            result = dataclasses.replace(
                result, epochs=None, early_stopping=dataclasses.replace(base, **stopping)
            )
        elif "epochs" in overrides:
            result = dataclasses.replace(result, early_stopping=None)
        return result


@dataclass(frozen=True)
class BenchSettings:
    lengths: tuple[int, ...] = DEFAULT_LENGTHS
    batch_size: int = 1
    reps: int = 10
    warmup: int = 2
    seed: int = DEFAULT_SEED


@dataclass
class RunSettings:
    seed: int = DEFAULT_SEED
    threads: int = 1
    output_format: str = "table"  # "table" | "json"


@dataclass
class Config:
    """Resolved distilkit configuration."""

    run: RunSettings = field(default_factory=RunSettings)
    distill: DistillConfig = field(default_factory=DistillConfig)
    finetune: dict[str, dict] = field(default_factory=dict)
    bench: BenchSettings = field(default_factory=BenchSettings)
    cleaning: CleaningRules = field(default_factory=CleaningRules)
    source: Path | None = None
    problems: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "run": dataclasses.asdict(self.run),
            "distill": dataclasses.asdict(self.distill),
            "finetune": self.finetune,
            "bench": dataclasses.asdict(self.bench),
            "source": str(self.source) if self.source else None,
        }


def _type_errors(obj) -> list[str]:
    errors = []
    for f in dataclasses.fields(obj):
        value = getattr(obj, f.name)
        expected = int if f.type in ("int", int) else float if f.type in ("float", float) else None
        if expected is int and (isinstance(value, bool) or not isinstance(value, int)):
            errors.append(f"{f.name} must be an integer, got {value!r}")
        elif expected is float and (isinstance(value, bool) or not isinstance(value, int | float)):
            errors.append(f"{f.name} must be a number, got {value!r}")
    return errors


def find_config_file(config_path: str | Path | None = None) -> Path | None:
    """Resolve the config file: explicit path, then $DISTILKIT_CONFIG_DIR, then cwd."""
    if config_path:
        return Path(config_path)
    env_dir = os.environ.get("DISTILKIT_CONFIG_DIR")
    if env_dir and (Path(env_dir) / DEFAULT_CONFIG_FILE).exists():
        return Path(env_dir) / DEFAULT_CONFIG_FILE
    local = Path(DEFAULT_CONFIG_FILE)
    return local if local.exists() else None


def _section(raw: dict, name: str, cls, problems: list[str], base):
    section = raw.get(name, {})
    if not isinstance(section, dict):
        problems.append(f"[{name}] must be a table")
        return base
    allowed = {f.name for f in dataclasses.fields(cls)}
    if cls is not RunSettings:
        # One seed per run, set under [run].
        allowed.discard("seed")
    unknown = set(section) - allowed
    if unknown:
        problems.append(f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")
    values = {k: v for k, v in section.items() if k in allowed}
    if "lengths" in values and isinstance(values["lengths"], list):
        values["lengths"] = tuple(values["lengths"])
    return dataclasses.replace(base, **values)


def _env_int(name: str, problems: list[str]) -> int | None:
    if name not in os.environ:
        return None
    try:
        return int(os.environ[name])
    except ValueError:
        problems.append(f"{name} must be an integer, got {os.environ[name]!r}")
        return None


def load_config(
    config_path: str | Path | None = None,
    *,
    seed: int | None = None,
    threads: int | None = None,
    output_format: str | None = None,
) -> Config:
    """Load configuration in priority order:

    1. CLI flags (passed as keyword args)
    2. Environment variables
    3. ``distilkit.toml`` file
    4. Built-in defaults
    """
    cfg = Config()
    path = find_config_file(config_path)

    # --- Load from TOML file ---
    if path is not None:
        if not path.exists():
            raise ConfigError(f"Config file '{path}' does not exist.")
        if path.stat().st_size > _MAX_CONFIG_SIZE:
            raise ConfigError(
                f"Config file '{path}' is {path.stat().st_size} bytes, "
                f"over the {_MAX_CONFIG_SIZE} byte limit."
            )
        try:
            raw = tomllib.loads(path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"Config file '{path}' is not valid TOML: {exc}") from exc
        cfg.source = path
        problems = cfg.problems
        cfg.run = _section(raw, "run", RunSettings, problems, cfg.run)
        cfg.distill = _section(raw, "distill", DistillConfig, problems, cfg.distill)
        cfg.bench = _section(raw, "bench", BenchSettings, problems, cfg.bench)
        finetune = raw.get("finetune", {})
        if isinstance(finetune, dict) and all(isinstance(v, dict) for v in finetune.values()):
            cfg.finetune = finetune
        else:
            problems.append("[finetune] must contain one table per task, e.g. [finetune.ner]")
        if "cleaning" in raw:
            try:
                cfg.cleaning = CleaningRules.from_dict(raw["cleaning"], base_dir=path.parent)
            except FormatError as exc:
                problems.append(str(exc))

    # --- Environment variable overrides ---
    env_seed = _env_int("DISTILKIT_SEED", cfg.problems)
    if env_seed is not None:
        cfg.run.seed = env_seed
    env_threads = _env_int("DISTILKIT_THREADS", cfg.problems)
    if env_threads is not None:
        cfg.run.threads = env_threads

    # --- CLI flags ---
    if seed is not None:
        cfg.run.seed = seed
    if threads is not None:
        cfg.run.threads = threads
    if output_format is not None:
        cfg.run.output_format = output_format

    cfg.distill = dataclasses.replace(cfg.distill, seed=cfg.run.seed)
    cfg.bench = dataclasses.replace(cfg.bench, seed=cfg.run.seed)
    return cfg


def validate_config(cfg: Config) -> list[str]:
    """Return a list of validation error strings (empty = valid)."""
    errors: list[str] = list(cfg.problems)
    type_errors = _type_errors(cfg.run) + _type_errors(cfg.bench)
    if type_errors:
        return errors + type_errors

    if cfg.run.threads < 1:
        errors.append(f"threads must be at least 1, got {cfg.run.threads}")

    valid_formats = {"table", "json"}
    if cfg.run.output_format not in valid_formats:
        errors.append(
            f"Invalid output format '{cfg.run.output_format}'. "
            f"Must be one of: {', '.join(sorted(valid_formats))}"
        )

    errors.extend(f"[distill] {e}" for e in cfg.distill.validate())

    bench = cfg.bench
    if not bench.lengths:
        errors.append("[bench] lengths must not be empty")
    elif any(not isinstance(n, int) or n < 1 for n in bench.lengths):
        errors.append(f"[bench] lengths must be positive integers, got {list(bench.lengths)}")
    if bench.reps < 3:
        errors.append(f"[bench] reps must be at least 3, got {bench.reps}")
    if bench.warmup < 0:
        errors.append(f"[bench] warmup must be non-negative, got {bench.warmup}")
    if bench.batch_size < 1:
        errors.append(f"[bench] batch_size must be at least 1, got {bench.batch_size}")

    errors.extend(f"[cleaning] {e}" for e in cfg.cleaning.validate())
    return errors
