"""Dense double-precision tensors and the reverse-mode tape that differentiates them."""

from __future__ import annotations

import threading
from collections.abc import Callable, Sequence
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]


@dataclass
class TapeEntry:
    """One primitive application: output, inputs and the local derivative closure.

    The closure maps the gradient of the output to one gradient per input
    (``None`` where an input receives nothing).
    """

    output: Tensor
    inputs: tuple[Tensor, ...]
    backward: BackwardFn


class ComputationTape:
    """Ordered record of primitive operations executed on one thread."""

    def __init__(self) -> None:
        self.entries: list[TapeEntry] = []
        self.enabled = True

    def record(self, entry: TapeEntry) -> None:
        self.entries.append(entry)

    def clear(self) -> None:
        self.entries.clear()

    def __len__(self) -> int:
        return len(self.entries)


# Tapes are thread-confined: a backward pass never sees another thread's ops.
_local = threading.local()


def current_tape() -> ComputationTape:
    """Return the tape of the calling thread, creating it on first use."""
    tape = getattr(_local, "tape", None)
    if tape is None:
        tape = ComputationTape()
        _local.tape = tape
    return tape


@contextmanager
def no_grad():
    """Disable recording on the current thread (evaluation, frozen teachers)."""
    tape = current_tape()
    previous = tape.enabled
    tape.enabled = False
    try:
        yield
    finally:
        tape.enabled = previous


def is_grad_enabled() -> bool:
    return current_tape().enabled


class Tensor:
    """An n-dimensional float64 array with an optional gradient buffer.

    Arithmetic operators build new tensors; when any operand requires a
    gradient and recording is enabled, the operation is appended to the
    thread's :class:`ComputationTape`.
    """

    __slots__ = ("data", "grad", "requires_grad", "is_leaf", "name")
    # Make ``ndarray <op> Tensor`` defer to the Tensor's reflected operator.
    __array_ufunc__ = None

    def __init__(
        self,
        data: object,
        requires_grad: bool = False,
        *,
        name: str | None = None,
    ) -> None:
        self.data: np.ndarray = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.is_leaf = True
        self.name = name

    # ------------------------------------------------------------------
    # Introspection
    # ------------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> Tensor:
        """Return a constant tensor sharing this tensor's values."""
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    def __len__(self) -> int:
        return self.shape[0]

    # ------------------------------------------------------------------
    # Operators (implemented in ops)
    # ------------------------------------------------------------------

    def __add__(self, other: object) -> Tensor:
        from . import ops

        return ops.add(self, other)

    def __radd__(self, other: object) -> Tensor:
        from . import ops

        return ops.add(other, self)

    def __sub__(self, other: object) -> Tensor:
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other: object) -> Tensor:
        from . import ops

        return ops.sub(other, self)

    def __mul__(self, other: object) -> Tensor:
        from . import ops

        return ops.mul(self, other)

    def __rmul__(self, other: object) -> Tensor:
        from . import ops

        return ops.mul(other, self)

    def __truediv__(self, other: object) -> Tensor:
        from . import ops

        return ops.div(self, other)

    def __rtruediv__(self, other: object) -> Tensor:
        from . import ops

        return ops.div(other, self)

    def __neg__(self) -> Tensor:
        from . import ops

        return ops.mul(self, -1.0)

    def __pow__(self, exponent: float) -> Tensor:
        from . import ops

        return ops.power(self, exponent)

    def __matmul__(self, other: Tensor) -> Tensor:
        from . import ops

        return ops.matmul(self, other)

    def __getitem__(self, index: object) -> Tensor:
        from . import ops

        return ops.getitem(self, index)

    def sum(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        from . import ops

        return ops.reduce_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        from . import ops

        return ops.reduce_mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> Tensor:
        from . import ops

        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return ops.reshape(self, shape)

    def transpose(self, *axes: int) -> Tensor:
        from . import ops

        return ops.transpose(self, axes or None)


def as_tensor(value: object) -> Tensor:
    """Wrap *value* as a constant tensor unless it already is one."""
    return value if isinstance(value, Tensor) else Tensor(value)


def make_result(
    data: np.ndarray,
    inputs: tuple[Tensor, ...],
    backward: BackwardFn,
) -> Tensor:
    """Create the output of a primitive and record it when gradients are needed."""
    out = Tensor(data)
    tape = current_tape()
    if tape.enabled and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out.is_leaf = False
        tape.record(TapeEntry(out, inputs, backward))
    return out


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum *grad* over the axes that broadcasting expanded to reach *shape*."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, extent in enumerate(shape) if extent == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def backward(loss: Tensor) -> None:
    """Replay the current tape in reverse and accumulate gradients into leaves.

    Every leaf that requires a gradient receives its total contribution in a
    single write; the tape is cleared afterwards.
    """
    if loss.ndim != 0:
        raise ContractError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ContractError("loss was not produced on an active tape (nothing requires grad)")

    tape = current_tape()
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: dict[int, Tensor] = {}
    if loss.is_leaf:
        leaves[id(loss)] = loss

    for entry in reversed(tape.entries):
        upstream = grads.pop(id(entry.output), None)
        if upstream is None:
            continue
        local = entry.backward(upstream)
        for tensor, grad in zip(entry.inputs, local):
            if grad is None or not tensor.requires_grad:
                continue
            grad = unbroadcast(np.asarray(grad, dtype=np.float64), tensor.shape)
            key = id(tensor)
            grads[key] = grads[key] + grad if key in grads else grad
            if tensor.is_leaf:
                leaves[key] = tensor

    for key, leaf in leaves.items():
        total = grads[key]
        leaf.grad = total.copy() if leaf.grad is None else leaf.grad + total
    tape.clear()
