"""Exception hierarchy shared by every distilkit module."""

from __future__ import annotations


class DistilkitError(Exception):
    """Base class for all distilkit errors."""


class ConfigError(DistilkitError, ValueError):
    """A configuration violates one of its invariants."""

    def __init__(self, errors: str | list[str]) -> None:
        self.errors = [errors] if isinstance(errors, str) else list(errors)
        super().__init__("; ".join(self.errors))


class DimensionError(DistilkitError, ValueError):
    """Operand shapes are incompatible."""


class DomainError(DistilkitError, ValueError):
    """A numeric argument lies outside the domain of the operation."""


class ContractError(DistilkitError, ValueError):
    """A caller violated the documented contract of an operation."""


class InputError(DistilkitError, ValueError):
    """Model inputs are out of range for the model configuration."""


class FormatError(DistilkitError, ValueError):
    """A file does not follow its documented format."""


class DataError(DistilkitError, ValueError):
    """A dataset record is malformed or carries an invalid label."""


class AlignmentError(DistilkitError, ValueError):
    """Two prediction sets do not cover the same example ids."""

    def __init__(self, message: str, missing: list[str] | None = None) -> None:
        self.missing = missing or []
        if self.missing:
            shown = ", ".join(self.missing[:20])
            more = f" (+{len(self.missing) - 20} more)" if len(self.missing) > 20 else ""
            message = f"{message}: {shown}{more}"
        super().__init__(message)


class UndefinedCorrelationError(DistilkitError, ValueError):
    """Correlation is undefined because an input has zero variance."""


class CorpusIOError(DistilkitError, OSError):
    """Reading or writing a corpus file failed."""


class TrainingDivergedError(DistilkitError, RuntimeError):
    """A loss component became NaN or infinite."""


class NoSupervisedPositionsWarning(UserWarning):
    """A distillation batch had no masked positions to supervise."""
