"""
Exception and warning types shared by the simulator and the CLI
"""

from typing import Any, Dict, Optional


class SpectrumError(Exception):
    """Base class for every error raised by this package."""


class RegimeError(SpectrumError, ValueError):
    """Parameters fall outside the validity regime of the model."""


class IntegrationError(SpectrumError, RuntimeError):
    """Time integration failed."""


class EmptySpectrum(SpectrumError, ValueError):
    """No peak rises above the prominence threshold."""


class FitError(SpectrumError, RuntimeError):
    """Least-squares fit did not converge.

    ``last_iterate`` holds the parameter values of the final iteration so
    callers can inspect how far the fit got.
    """

    def __init__(self, message: str, last_iterate: Optional[Dict[str, float]] = None) -> None:
        super().__init__(message)
        self.last_iterate: Dict[str, float] = dict(last_iterate or {})


class ComparisonError(SpectrumError, ValueError):
    """Two peak reports cannot be matched peak for peak."""


class ConfigError(SpectrumError, ValueError):
    """Scenario or sweep file could not be parsed."""

    def __init__(
        self,
        message: str,
        path: Optional[Any] = None,
        line: Optional[int] = None,
        field: Optional[str] = None,
    ) -> None:
        self.path = path
        self.line = line
        self.field = field
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        if field:
            location += f"{field}: "
        super().__init__(location + message)


class PhysicsWarning(UserWarning):
    """A result was produced but a validity condition is only marginally met."""
