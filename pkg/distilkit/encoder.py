"""Miniature BERT-style encoder: configuration, forward pass, MLM head, checkpoints."""

from __future__ import annotations

import copy
import dataclasses
import io
import json
import logging
import math
import struct
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import truncnorm

from .errors import ConfigError, DimensionError, FormatError, InputError
from .fileio import atomic_write_bytes
from .numerics import (
    Tensor,
    dropout,
    embedding,
    gelu,
    layer_norm,
    read_tensor,
    softmax_with_temperature,
    tanh,
    write_tensor,
)
from .numerics.serialize import read_exact
from .tokenizer import Encoding

logger = logging.getLogger(__name__)

INIT_STD = 0.02
CHECKPOINT_MAGIC = b"DKCKPT\x00\x01"
CHECKPOINT_VERSION = 1
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture of an encoder; ``intermediate`` defaults to ``4 * hidden``."""

    num_layers: int
    hidden: int
    num_heads: int
    vocab_size: int
    intermediate: int | None = None
    max_position: int = 512
    type_vocab: int = 2
    dropout: float = 0.1
    layer_norm_eps: float = 1e-12

    def __post_init__(self) -> None:
        if self.intermediate is None:
            object.__setattr__(self, "intermediate", 4 * self.hidden)

    def validate(self) -> list[str]:
        """Return a list of invariant violations (empty = valid)."""
        errors: list[str] = []
        for name in ("num_layers", "hidden", "num_heads", "vocab_size", "intermediate",
                     "max_position", "type_vocab"):
            value = getattr(self, name)
            if not isinstance(value, int) or value <= 0:
                errors.append(f"{name} must be a positive integer, got {value!r}")
        if not errors and self.hidden % self.num_heads:
            errors.append(
                f"hidden ({self.hidden}) must be divisible by num_heads ({self.num_heads})"
            )
        if not 0.0 <= self.dropout < 1.0:
            errors.append(f"dropout must lie in [0, 1), got {self.dropout}")
        return errors

    @property
    def head_dim(self) -> int:
        return self.hidden // self.num_heads

    # -- closed-form parameter accounting ------------------------------

    def embedding_params(self) -> int:
        h = self.hidden
        return (self.vocab_size + self.max_position + self.type_vocab) * h + 2 * h

    def layer_params(self) -> int:
        h, i = self.hidden, self.intermediate
        attention = 4 * (h * h + h)
        feed_forward = (h * i + i) + (i * h + h)
        return attention + feed_forward + 2 * (2 * h)

    def pooler_params(self) -> int:
        return self.hidden * self.hidden + self.hidden

    def mlm_head_params(self) -> int:
        """Transform dense + layer norm + output bias; the projection is tied."""
        h = self.hidden
        return h * h + h + 2 * h + self.vocab_size

    def param_count(self) -> int:
        layers = self.num_layers * self.layer_params()
        return self.embedding_params() + layers + self.pooler_params()

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> ModelConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {', '.join(sorted(unknown))}")
        return cls(**data)


@dataclass
class EncodedBatch:
    """A stack of :class:`Encoding` rows as ``[batch, seq_len]`` integer arrays."""

    input_ids: np.ndarray
    attention_mask: np.ndarray
    segment_ids: np.ndarray

    @classmethod
    def from_encodings(cls, encodings: Sequence[Encoding]) -> EncodedBatch:
        if not encodings:
            raise InputError("cannot build a batch from zero encodings")
        lengths = {len(e) for e in encodings}
        if len(lengths) != 1:
            raise InputError(f"encodings in a batch must share one length, got {sorted(lengths)}")
        return cls(
            input_ids=np.array([e.input_ids for e in encodings], dtype=np.int64),
            attention_mask=np.array([e.attention_mask for e in encodings], dtype=np.int64),
            segment_ids=np.array([e.segment_ids for e in encodings], dtype=np.int64),
        )

    def __len__(self) -> int:
        return int(self.input_ids.shape[0])

    @property
    def seq_len(self) -> int:
        return int(self.input_ids.shape[1])

    def select(self, rows: Sequence[int] | np.ndarray) -> EncodedBatch:
        rows = np.asarray(rows, dtype=np.int64)
        return EncodedBatch(self.input_ids[rows], self.attention_mask[rows], self.segment_ids[rows])


@dataclass
class EncoderOutput:
    """Hidden states after the embeddings and after every layer, plus attention maps."""

    hidden_states: list[Tensor]
    attentions: list[Tensor]
    pooled: Tensor

    @property
    def last_hidden(self) -> Tensor:
        return self.hidden_states[-1]


@dataclass
class EncoderModel:
    """Named parameter tensors plus the configuration that shaped them."""

    config: ModelConfig
    params: dict[str, Tensor]
    training: bool = False
    seed: int = 0
    _dropout_rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._dropout_rng = np.random.default_rng([self.seed, 1])

    def train(self) -> EncoderModel:
        self.training = True
        return self

    def eval(self) -> EncoderModel:
        self.training = False
        return self

    def parameters(self) -> dict[str, Tensor]:
        return self.params

    def layer_params(self, index: int) -> dict[str, Tensor]:
        prefix = f"layers.{index}."
        return {k[len(prefix):]: v for k, v in self.params.items() if k.startswith(prefix)}

    def freeze(self) -> EncoderModel:
        for p in self.params.values():
            p.requires_grad = False
            p.grad = None
        return self

    def copy(self) -> EncoderModel:
        params = {
            name: Tensor(p.data.copy(), requires_grad=p.requires_grad, name=name)
            for name, p in self.params.items()
        }
        return EncoderModel(copy.deepcopy(self.config), params, self.training, self.seed)

    def __call__(self, batch: EncodedBatch) -> EncoderOutput:
        return forward(self, batch)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def parameter_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Every parameter name and shape, in checkpoint order. Weights are ``[in, out]``."""
    h, i, v = config.hidden, config.intermediate, config.vocab_size
    shapes: dict[str, tuple[int, ...]] = {
        "embeddings.word": (v, h),
        "embeddings.position": (config.max_position, h),
        "embeddings.segment": (config.type_vocab, h),
        "embeddings.ln.gamma": (h,),
        "embeddings.ln.beta": (h,),
    }
    for n in range(config.num_layers):
        p = f"layers.{n}"
        for proj in ("query", "key", "value", "output"):
            shapes[f"{p}.attention.{proj}.weight"] = (h, h)
            shapes[f"{p}.attention.{proj}.bias"] = (h,)
        shapes[f"{p}.attention.ln.gamma"] = (h,)
        shapes[f"{p}.attention.ln.beta"] = (h,)
        shapes[f"{p}.ffn.intermediate.weight"] = (h, i)
        shapes[f"{p}.ffn.intermediate.bias"] = (i,)
        shapes[f"{p}.ffn.output.weight"] = (i, h)
        shapes[f"{p}.ffn.output.bias"] = (h,)
        shapes[f"{p}.ffn.ln.gamma"] = (h,)
        shapes[f"{p}.ffn.ln.beta"] = (h,)
    shapes["pooler.weight"] = (h, h)
    shapes["pooler.bias"] = (h,)
    shapes["mlm.transform.weight"] = (h, h)
    shapes["mlm.transform.bias"] = (h,)
    shapes["mlm.ln.gamma"] = (h,)
    shapes["mlm.ln.beta"] = (h,)
    shapes["mlm.bias"] = (v,)
    return shapes


def truncated_normal(shape: tuple[int, ...], rng: np.random.Generator, std: float = INIT_STD):
    """Normal(0, std) samples truncated at two standard deviations."""
    return truncnorm.rvs(-2.0, 2.0, loc=0.0, scale=std, size=shape, random_state=rng)


def new_model(config: ModelConfig, seed: int = 42) -> EncoderModel:
    """Initialise an encoder: truncated-normal weights, zero biases, unit layer-norm scales."""
    errors = config.validate()
    if errors:
        raise ConfigError(errors)
    rng = np.random.default_rng(seed)
    params: dict[str, Tensor] = {}
    for name, shape in parameter_shapes(config).items():
        if name.endswith(".gamma"):
            data = np.ones(shape)
        elif name.endswith((".bias", ".beta")):
            data = np.zeros(shape)
        else:
            data = truncated_normal(shape, rng)
        params[name] = Tensor(data, requires_grad=True, name=name)
    logger.debug("Initialised encoder with %d parameter tensors (seed %d).", len(params), seed)
    return EncoderModel(config, params, training=False, seed=seed)


def count_params(model: EncoderModel, include_mlm_head: bool = False) -> int:
    """Scalars in embeddings, layers and pooler; the tied projection counts once."""
    return sum(
        p.size
        for name, p in model.params.items()
        if include_mlm_head or not name.startswith("mlm.")
    )


# ---------------------------------------------------------------------------
# Forward pass
# ---------------------------------------------------------------------------


def _linear(x: Tensor, params: dict[str, Tensor], prefix: str) -> Tensor:
    return x @ params[f"{prefix}.weight"] + params[f"{prefix}.bias"]


def _check_inputs(model: EncoderModel, batch: EncodedBatch) -> None:
    cfg = model.config
    if batch.seq_len > cfg.max_position:
        raise InputError(f"sequence length {batch.seq_len} exceeds max_position {cfg.max_position}")
    ids = batch.input_ids
    if ids.size and (ids.min() < 0 or ids.max() >= cfg.vocab_size):
        bad = int(ids.max() if ids.max() >= cfg.vocab_size else ids.min())
        raise InputError(f"token id {bad} out of range for vocab_size {cfg.vocab_size}")
    segs = batch.segment_ids
    if segs.size and (segs.min() < 0 or segs.max() >= cfg.type_vocab):
        raise InputError(f"segment id out of range for type_vocab {cfg.type_vocab}")


def _attention(
    model: EncoderModel,
    x: Tensor,
    params: dict[str, Tensor],
    prefix: str,
    additive_mask: np.ndarray,
) -> tuple[Tensor, Tensor]:
    cfg = model.config
    batch, seq_len, _ = x.shape
    heads, head_dim = cfg.num_heads, cfg.head_dim

    def split_heads(t: Tensor) -> Tensor:
        return t.reshape(batch, seq_len, heads, head_dim).transpose(0, 2, 1, 3)

    q = split_heads(_linear(x, params, f"{prefix}.query"))
    k = split_heads(_linear(x, params, f"{prefix}.key"))
    v = split_heads(_linear(x, params, f"{prefix}.value"))
    scores = (q @ k.transpose(0, 1, 3, 2)) * (1.0 / math.sqrt(head_dim)) + additive_mask
    probs = softmax_with_temperature(scores, 1.0)
    attended = dropout(probs, cfg.dropout, model._dropout_rng, model.training) @ v
    context = attended.transpose(0, 2, 1, 3).reshape(batch, seq_len, cfg.hidden)
    return _linear(context, params, f"{prefix}.output"), probs


def forward(model: EncoderModel, batch: EncodedBatch) -> EncoderOutput:
    """Post-layer-norm transformer encoder over a padded batch."""
    _check_inputs(model, batch)
    cfg, p = model.config, model.params
    rng, training = model._dropout_rng, model.training
    positions = np.arange(batch.seq_len)

    x = (
        embedding(p["embeddings.word"], batch.input_ids)
        + embedding(p["embeddings.position"], positions)
        + embedding(p["embeddings.segment"], batch.segment_ids)
    )
    x = layer_norm(x, p["embeddings.ln.gamma"], p["embeddings.ln.beta"], cfg.layer_norm_eps)
    x = dropout(x, cfg.dropout, rng, training)

    # Padded keys get -inf so their softmax weight is exactly zero.
    additive_mask = np.where(batch.attention_mask[:, None, None, :] == 1, 0.0, -np.inf)

    hidden_states = [x]
    attentions = []
    for n in range(cfg.num_layers):
        prefix = f"layers.{n}"
        attn_out, probs = _attention(model, x, p, f"{prefix}.attention", additive_mask)
        attn_out = dropout(attn_out, cfg.dropout, rng, training)
        x = layer_norm(
            x + attn_out, p[f"{prefix}.attention.ln.gamma"], p[f"{prefix}.attention.ln.beta"],
            cfg.layer_norm_eps,
        )
        ff = gelu(_linear(x, p, f"{prefix}.ffn.intermediate"))
        ff = dropout(_linear(ff, p, f"{prefix}.ffn.output"), cfg.dropout, rng, training)
        x = layer_norm(
            x + ff, p[f"{prefix}.ffn.ln.gamma"], p[f"{prefix}.ffn.ln.beta"], cfg.layer_norm_eps
        )
        hidden_states.append(x)
        attentions.append(probs)

    pooled = tanh(_linear(x[:, 0, :], p, "pooler"))
    return EncoderOutput(hidden_states=hidden_states, attentions=attentions, pooled=pooled)


def mlm_logits(model: EncoderModel, final_hidden: Tensor) -> Tensor:
    """Vocabulary logits: dense+GELU+layer-norm, then the tied embedding projection."""
    cfg, p = model.config, model.params
    if final_hidden.shape[-1] != cfg.hidden:
        raise DimensionError(
            f"mlm_logits: hidden size {final_hidden.shape[-1]} != config hidden {cfg.hidden}"
        )
    h = gelu(_linear(final_hidden, p, "mlm.transform"))
    h = layer_norm(h, p["mlm.ln.gamma"], p["mlm.ln.beta"], cfg.layer_norm_eps)
    return h @ p["embeddings.word"].transpose() + p["mlm.bias"]


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def checkpoint_bytes(
    config: ModelConfig,
    tensors: dict[str, np.ndarray],
    metadata: dict | None = None,
) -> bytes:
    buf = io.BytesIO()
    header = json.dumps(
        {"config": config.to_dict(), "metadata": metadata or {}}, sort_keys=True
    ).encode("utf-8")
    buf.write(CHECKPOINT_MAGIC)
    buf.write(_U32.pack(CHECKPOINT_VERSION))
    buf.write(_U64.pack(len(header)))
    buf.write(header)
    buf.write(_U64.pack(len(tensors)))
    for name, array in tensors.items():
        encoded = name.encode("utf-8")
        buf.write(_U32.pack(len(encoded)))
        buf.write(encoded)
        write_tensor(buf, array)
    return buf.getvalue()


def read_checkpoint(path: str | Path) -> tuple[ModelConfig, dict[str, np.ndarray], dict]:
    """Parse a checkpoint file into (config, named arrays, metadata)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise FormatError(f"{path}: not a distilkit checkpoint (bad magic)")
        (version,) = _U32.unpack(read_exact(fh, _U32.size, "checkpoint version"))
        if version != CHECKPOINT_VERSION:
            raise FormatError(f"{path}: unsupported checkpoint version {version}")
        (header_len,) = _U64.unpack(read_exact(fh, _U64.size, "header length"))
        try:
            header = json.loads(read_exact(fh, header_len, "header").decode("utf-8"))
            config = ModelConfig.from_dict(header["config"])
        except (ValueError, KeyError, TypeError) as exc:
            raise FormatError(f"{path}: corrupt checkpoint header ({exc})") from exc
        (count,) = _U64.unpack(read_exact(fh, _U64.size, "tensor count"))
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = _U32.unpack(read_exact(fh, _U32.size, "tensor name length"))
            name = read_exact(fh, name_len, "tensor name").decode("utf-8")
            tensors[name] = read_tensor(fh)
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes after the last tensor")
    return config, tensors, header.get("metadata", {})


def model_from_arrays(config: ModelConfig, arrays: dict[str, np.ndarray], seed: int = 0):
    """Build an :class:`EncoderModel` from named arrays, checking names and shapes."""
    params: dict[str, Tensor] = {}
    for name, shape in parameter_shapes(config).items():
        if name not in arrays:
            raise FormatError(f"checkpoint is missing tensor {name!r}")
        if arrays[name].shape != shape:
            raise FormatError(f"tensor {name!r} has shape {arrays[name].shape}, expected {shape}")
        params[name] = Tensor(arrays[name].copy(), requires_grad=True, name=name)
    return EncoderModel(config, params, training=False, seed=seed)


def save_checkpoint(model: EncoderModel, path: str | Path, metadata: dict | None = None) -> None:
    arrays = {name: p.data for name, p in model.params.items()}
    atomic_write_bytes(path, checkpoint_bytes(model.config, arrays, metadata))
    logger.info("Saved checkpoint %s (%d tensors).", path, len(arrays))


def load_checkpoint(path: str | Path) -> EncoderModel:
    config, arrays, _ = read_checkpoint(path)
    return model_from_arrays(config, arrays)


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

PRESETS: dict[str, ModelConfig] = {
    "mbert": ModelConfig(num_layers=12, hidden=768, num_heads=12, vocab_size=120_000),
    "bert-base-ro": ModelConfig(num_layers=12, hidden=768, num_heads=12, vocab_size=50_000),
    "robert-small": ModelConfig(num_layers=12, hidden=256, num_heads=8, vocab_size=38_000),
    "robert-base": ModelConfig(num_layers=12, hidden=768, num_heads=12, vocab_size=38_000),
    "robert-large": ModelConfig(num_layers=24, hidden=1024, num_heads=16, vocab_size=38_000),
    "distil-bert-base-ro": ModelConfig(num_layers=6, hidden=768, num_heads=12, vocab_size=50_000),
    "distil-robert-base": ModelConfig(num_layers=6, hidden=768, num_heads=12, vocab_size=38_000),
    "distilmulti-bert-base-ro": ModelConfig(
        num_layers=6, hidden=768, num_heads=12, vocab_size=50_000
    ),
    "toy-teacher": ModelConfig(
        num_layers=4, hidden=64, num_heads=4, vocab_size=64, max_position=128
    ),
    "toy-student": ModelConfig(
        num_layers=2, hidden=64, num_heads=4, vocab_size=64, max_position=128
    ),
}

# Published sizes, in millions of parameters, for the full-scale presets.
REPORTED_PARAMS_M: dict[str, int] = {
    "mbert": 177,
    "bert-base-ro": 124,
    "robert-small": 19,
    "robert-base": 114,
    "robert-large": 341,
    "distil-bert-base-ro": 81,
    "distil-robert-base": 72,
    "distilmulti-bert-base-ro": 81,
}

FLOAT32_BYTES = 4


def get_preset_config(name: str, **overrides) -> ModelConfig:
    try:
        config = PRESETS[name]
    except KeyError:
        valid = ", ".join(sorted(PRESETS))
        raise ConfigError(f"Unknown model preset {name!r}. Must be one of: {valid}") from None
    if "hidden" in overrides and "intermediate" not in overrides:
        overrides["intermediate"] = 4 * overrides["hidden"]
    return dataclasses.replace(config, **overrides) if overrides else config


@dataclass(frozen=True)
class SizeRow:
    name: str
    config: ModelConfig
    params: int
    reported_m: int | None

    @property
    def size_mb(self) -> float:
        return self.params * FLOAT32_BYTES / 2**20

    def to_dict(self) -> dict:
        return {
            "model": self.name,
            "layers": self.config.num_layers,
            "hidden": self.config.hidden,
            "heads": self.config.num_heads,
            "vocab": self.config.vocab_size,
            "params_m": round(self.params / 1e6, 2),
            "reported_m": self.reported_m,
            "size_mb": round(self.size_mb, 1),
        }


def size_table(presets: dict[str, ModelConfig] | None = None) -> list[SizeRow]:
    """Closed-form parameter counts and float32 sizes for every preset."""
    presets = PRESETS if presets is None else presets
    return [
        SizeRow(name, config, config.param_count(), REPORTED_PARAMS_M.get(name))
        for name, config in presets.items()
    ]
