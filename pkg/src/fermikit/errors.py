"""Exception types shared across the fermikit modules."""
from __future__ import annotations

from typing import Any, Dict, Optional


class FermikitError(RuntimeError):
    pass


class DomainError(FermikitError, ValueError):
    """Raised when an argument lies outside the domain an operation accepts."""


class PoleProximityError(DomainError):
    def __init__(self, message: str, k: int):
        super().__init__(message)
        self.k = k


class PathValidityError(DomainError):
    pass


class ContourConditionError(DomainError):
    pass


class ContinuationError(DomainError):
    pass


class ConfigError(FermikitError):
    pass


class ConvergenceError(FermikitError):
    """Raised when an adaptive refinement fails to reach its tolerance."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics: Dict[str, Any] = dict(diagnostics or {})

    def describe(self) -> str:
        lines = [str(self)]
        for key in sorted(self.diagnostics):
            lines.append(f"  {key}: {self.diagnostics[key]}")
        return "\n".join(lines)
