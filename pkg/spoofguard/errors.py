"""Exception hierarchy shared by every spoofguard module."""

from __future__ import annotations


class SpoofGuardError(Exception):
    """Base error for spoofguard."""

    exit_code = 1


class ConfigError(SpoofGuardError):
    """Invalid configuration or command-line usage."""

    exit_code = 1


class DataValidationError(SpoofGuardError, ValueError):
    """Input data violates a documented invariant."""

    exit_code = 2

    def __init__(self, message: str, row: int | None = None, field: str | None = None) -> None:
        self.row = row
        self.field = field
        location = []
        if row is not None:
            location.append(f"row {row}")
        if field is not None:
            location.append(f"field '{field}'")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class DegenerateInputError(DataValidationError):
    """Geometry outside what the local projection can represent."""


class ModelFormatError(DataValidationError):
    """A model or state snapshot file is corrupt or from another version."""


class InjectionError(DataValidationError):
    """An attack specification does not fit the trajectory it targets."""


class NumericalError(SpoofGuardError):
    """Non-finite values appeared during a numerical procedure."""

    exit_code = 3

    def __init__(self, message: str, epoch: int | None = None, batch: int | None = None) -> None:
        self.epoch = epoch
        self.batch = batch
        if epoch is not None:
            message = f"{message} (epoch {epoch}, batch {batch})"
        super().__init__(message)
