"""Exception hierarchy shared by every module."""

from __future__ import annotations


class MtdError(Exception):
    """Base class for all library errors."""


class CaseParseError(MtdError, ValueError):
    """A case file line could not be parsed."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class ValidationError(MtdError, ValueError):
    """Input violates a structural invariant (connectivity, bounds, shapes)."""


class ObservabilityError(ValidationError):
    """Measurement matrix is rank deficient, the state cannot be estimated."""


class PlanError(ValidationError):
    """Perturbation plan is inconsistent with the case or its ratio bounds."""


class IdentificationError(MtdError):
    """Injected state bias is not uniquely recoverable (MTD not complete)."""


class InfeasibleError(MtdError):
    """An optimization problem or a search target has no solution."""
