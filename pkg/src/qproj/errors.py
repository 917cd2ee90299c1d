"""Exception taxonomy.

Everything raised on bad input derives from QprojError, with ValueError
mixed in so callers that only know stdlib semantics still catch sensible
types. DataError carries a `kind` tag so file-format failures stay
distinguishable without a subclass per case.
"""

from __future__ import annotations


class QprojError(ValueError):
    """Base class for all qproj input and state errors."""


class DomainError(QprojError):
    """A value is outside the mathematical domain (non-finite, empty, zero-norm)."""


class DimensionError(QprojError):
    """Mismatched or invalid array dimensions."""


class ConfigError(QprojError):
    """Invalid configuration (non-divisible dims, bad hyperparameters)."""


class CapacityError(QprojError):
    """Request exceeds a hard resource guard (dense oracle qubit limit)."""


class DataError(QprojError):
    """Malformed persisted data. `kind` names the failure category."""

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


class TrainingDivergence(QprojError):
    """Training hit a non-finite loss or gradient; message carries epoch/batch."""
