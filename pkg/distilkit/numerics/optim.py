"""Decoupled-weight-decay Adam, the warmup/decay schedule and gradient clipping."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ContractError
from .tensor import Tensor

logger = logging.getLogger(__name__)


def clip_grad_norm(params: Iterable[Tensor], max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is at most *max_norm*.

    Returns the norm measured before clipping.
    """
    if not max_norm > 0:
        raise ConfigError(f"max_norm must be positive, got {max_norm}")
    params = list(params)
    missing = [p.name or repr(p) for p in params if p.grad is None]
    if missing:
        raise ContractError(f"clip_grad_norm: gradients missing for {', '.join(missing[:5])}")
    norm = math.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in params))
    if norm > max_norm:
        scale = max_norm / norm
        for p in params:
            p.grad = p.grad * scale
    return norm


@dataclass(frozen=True)
class LinearSchedule:
    """Linear warmup from 0 to *peak_lr* over *warmup_steps*, then linear decay to 0."""

    peak_lr: float
    total_steps: int
    warmup_steps: int = 0

    @classmethod
    def from_fraction(cls, peak_lr: float, total_steps: int, warmup_fraction: float):
        return cls(peak_lr, total_steps, int(round(warmup_fraction * total_steps)))

    def lr_at(self, step: int) -> float:
        if step < self.warmup_steps:
            return self.peak_lr * step / self.warmup_steps
        remaining = self.total_steps - self.warmup_steps
        if remaining <= 0:
            return 0.0
        return self.peak_lr * max(0, self.total_steps - step) / remaining


def _decays(name: str) -> bool:
    # Biases and layer-norm scales/shifts are excluded from weight decay.
    return not name.endswith((".bias", ".gamma", ".beta"))


class AdamW:
    """Adam with decoupled weight decay over a named parameter mapping."""

    def __init__(
        self,
        params: Mapping[str, Tensor],
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-6,
        weight_decay: float = 0.0,
        decay_filter: Callable[[str], bool] = _decays,
    ) -> None:
        self.params = dict(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self._decay = {name: decay_filter(name) for name in self.params}
        self._m = {name: np.zeros_like(p.data) for name, p in self.params.items()}
        self._v = {name: np.zeros_like(p.data) for name, p in self.params.items()}
        self.steps = 0

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def step(self, lr: float | None = None) -> None:
        lr = self.lr if lr is None else lr
        self.steps += 1
        correction1 = 1.0 - self.beta1**self.steps
        correction2 = 1.0 - self.beta2**self.steps
        for name, p in self.params.items():
            if p.grad is None:
                continue
            if self.weight_decay and self._decay[name]:
                p.data -= lr * self.weight_decay * p.data
            m, v = self._m[name], self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * p.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * p.grad**2
            p.data -= lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
