"""
FID Spin-Wave Memory Simulator
Maxwell-Bloch storage and retrieval in inhomogeneously broadened absorbers,
closed-form efficiency oracles, input optimization and feasibility numbers
"""

from .core import (
    Direction,
    DetuningQuadrature,
    GAUSSIAN,
    LORENTZIAN,
    LineKind,
    LineShape,
    MediumScenario,
    PulseEnvelope,
    TimeGrid,
    exponential_input,
    make_time_grid,
    sample_distribution,
)
from .errors import ConfigError, ConvergenceFlag, DomainError, FidMemoryError, QuadratureError
from .mbsolve import MemoryResult, run_memory

__version__ = '0.3.0'

__all__ = [
    'Direction',
    'DetuningQuadrature',
    'GAUSSIAN',
    'LORENTZIAN',
    'LineKind',
    'LineShape',
    'MediumScenario',
    'PulseEnvelope',
    'TimeGrid',
    'exponential_input',
    'make_time_grid',
    'sample_distribution',
    'ConfigError',
    'ConvergenceFlag',
    'DomainError',
    'FidMemoryError',
    'QuadratureError',
    'MemoryResult',
    'run_memory',
]
