"""
Error types shared by the simulator modules.
"""

from dataclasses import dataclass


class FidMemoryError(Exception):
    """Base class for all simulator errors"""


class DomainError(FidMemoryError, ValueError):
    """Invalid physical or numerical argument"""


class ConfigError(FidMemoryError):
    """Run configuration or data file could not be used"""


class QuadratureError(FidMemoryError):
    """Frequency-domain quadrature did not reach its tolerance"""


@dataclass(frozen=True)
class ConvergenceFlag:
    """Non-fatal numerical warning carried on a result"""
    source: str
    message: str
    value: float = 0.0

    def __str__(self) -> str:
        return f"{self.source}: {self.message}"
