"""
Core Domain Types
=================

Dimensionless value types shared by every module: time grids, pulse envelopes,
detuning quadratures for the inhomogeneous line and the medium scenario.

Units: frequency in units of Γ (the inhomogeneous half width), time in units of
1/Γ, propagation distance in units of 1/α, so a scenario is fixed by
(αL, ΓT, line shape, retrieval direction) plus grid resolutions.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Union
import logging
import math

import numpy as np

import config
from fid_memory.errors import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

MIN_WINDOW_FACTOR = 15.0
MIN_TIME_POINTS = 16


class LineKind(str, Enum):
    LORENTZIAN = 'lorentzian'
    GAUSSIAN = 'gaussian'


class Direction(str, Enum):
    FORWARD = 'forward'
    BACKWARD = 'backward'


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class LineShape:
    """Inhomogeneous atomic distribution n(Δ); FWHM is always 2 * half_width"""
    kind: LineKind = LineKind.LORENTZIAN
    half_width: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'kind', LineKind(self.kind))
        if self.half_width <= 0:
            raise DomainError(f"half_width must be positive, got {self.half_width}")

    @property
    def gaussian_sigma(self) -> float:
        """Standard deviation of the Gaussian line with FWHM 2 * half_width"""
        return self.half_width / math.sqrt(2.0 * math.log(2.0))


LORENTZIAN = LineShape(LineKind.LORENTZIAN)
GAUSSIAN = LineShape(LineKind.GAUSSIAN)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid; t = 0 (end of input, π-pulse instant) is a node when it lies inside"""
    t_min: float
    t_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 2:
            raise DomainError(f"a time grid needs at least 2 points, got {self.n_points}")
        if not self.t_max > self.t_min:
            raise DomainError(f"empty time grid [{self.t_min}, {self.t_max}]")

    @property
    def dt(self) -> float:
        return (self.t_max - self.t_min) / (self.n_points - 1)

    @property
    def times(self) -> np.ndarray:
        t = np.linspace(self.t_min, self.t_max, self.n_points)
        if self.t_min < 0.0 < self.t_max:
            zero = self.zero_index
            if abs(t[zero]) < 1e-9 * self.dt:
                t[zero] = 0.0
        return t

    @property
    def zero_index(self) -> int:
        """Index of the node closest to t = 0"""
        return int(round(-self.t_min / self.dt))

    @property
    def duration(self) -> float:
        return self.t_max - self.t_min

    def mirrored(self) -> 'TimeGrid':
        return TimeGrid(-self.t_max, -self.t_min, self.n_points)

    def positive_half(self) -> 'TimeGrid':
        """Nodes with t >= 0 (the re-emission window)"""
        return TimeGrid(0.0, self.t_max, self.n_points - self.zero_index)


@dataclass(frozen=True)
class PulseEnvelope:
    """Complex field envelope sampled on a time grid; energy is Σ|E|²·dt"""
    grid: TimeGrid
    amplitude: np.ndarray = field(repr=False)

    def __post_init__(self):
        amplitude = np.array(self.amplitude, dtype=complex)
        if amplitude.shape != (self.grid.n_points,):
            raise DomainError(
                f"amplitude has shape {amplitude.shape}, grid has {self.grid.n_points} points"
            )
        object.__setattr__(self, 'amplitude', _frozen(amplitude))

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def scaled(self, factor: complex) -> 'PulseEnvelope':
        return PulseEnvelope(self.grid, self.amplitude * factor)


@dataclass(frozen=True)
class DetuningQuadrature:
    """Nodes Δᵢ (units of Γ) and positive weights discretizing n(Δ)"""
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    line: LineShape = LORENTZIAN

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise DomainError("nodes and weights must be 1D arrays of equal length")
        if np.any(weights <= 0):
            raise DomainError("quadrature weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise DomainError(f"weights sum to {weights.sum()!r}, expected 1")
        object.__setattr__(self, 'nodes', _frozen(nodes))
        object.__setattr__(self, 'weights', _frozen(weights))

    def __len__(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class MediumScenario:
    """Dimensionless description of one storage experiment"""
    alphaL: float
    gammaT: float
    line: LineShape = LORENTZIAN
    direction: Direction = Direction.BACKWARD
    n_z: int = config.RESOLUTION_DEFAULTS['n_z']
    n_delta: int = config.RESOLUTION_DEFAULTS['n_delta']
    n_points: int = config.RESOLUTION_DEFAULTS['n_points']
    window_factor: float = config.RESOLUTION_DEFAULTS['window_factor']

    def __post_init__(self):
        object.__setattr__(self, 'direction', Direction(self.direction))
        if self.alphaL < 0:
            raise DomainError(f"alphaL must be >= 0, got {self.alphaL}")
        if self.gammaT <= 0:
            raise DomainError(f"gammaT must be > 0, got {self.gammaT}")
        if self.n_z < 2 or self.n_delta < 2:
            raise DomainError(f"need n_z >= 2 and n_delta >= 2, got {self.n_z}, {self.n_delta}")
        if self.window_factor < MIN_WINDOW_FACTOR:
            raise DomainError(f"window_factor must be >= {MIN_WINDOW_FACTOR}")

    def time_grid(self) -> TimeGrid:
        return make_time_grid(self.gammaT, self.window_factor, self.n_points)

    def with_gammaT(self, gammaT: float) -> 'MediumScenario':
        return replace(self, gammaT=gammaT)

    def refined(self, factor: int = 2) -> 'MediumScenario':
        """Same physics with dt, dz and the detuning spacing refined by `factor`"""
        return replace(
            self,
            n_z=(self.n_z - 1) * factor + 1,
            n_delta=self.n_delta * factor,
            n_points=(self.n_points - 1) * factor + 1,
        )

    def resolution(self) -> dict:
        return {
            'n_z': self.n_z,
            'n_delta': self.n_delta,
            'n_points': self.n_points,
            'window_factor': self.window_factor,
        }


# ---------------------------------------------------------------------------
# Grids and quadratures
# ---------------------------------------------------------------------------

def make_time_grid(gammaT: float,
                   window_factor: float = MIN_WINDOW_FACTOR,
                   n_points: int = config.RESOLUTION_DEFAULTS['n_points']) -> TimeGrid:
    """
    Build the symmetric grid [−W·T, +W·T] (units of 1/Γ, T = ΓT).

    The negative half carries the input, the positive half the re-emission.
    An even point count is rounded up by one so that t = 0 is a node.

    Args:
        gammaT: Product ΓT of line half width and input time constant
        window_factor: W, at least 15 so the truncated input tail is below e^-30
        n_points: Number of samples (at least 16)

    Returns:
        TimeGrid
    """
    if not gammaT > 0:
        raise DomainError(f"gammaT must be > 0, got {gammaT}")
    if window_factor < MIN_WINDOW_FACTOR:
        raise DomainError(f"window_factor must be >= {MIN_WINDOW_FACTOR}, got {window_factor}")
    if n_points < MIN_TIME_POINTS:
        raise DomainError(f"n_points must be >= {MIN_TIME_POINTS}, got {n_points}")
    if n_points % 2 == 0:
        n_points += 1
    span = window_factor * gammaT
    return TimeGrid(-span, span, n_points)


def sample_distribution(line: LineShape, n_delta: int) -> DetuningQuadrature:
    """
    Discretize the spectral distribution n(Δ).

    Lorentzian: Δ = Γ·tan(θ) with θ at the midpoints of n equal cells of (−π/2, π/2),
    each node weighted 1/n (the substitution maps the Lorentzian onto a uniform
    density). Gaussian: Gauss–Hermite nodes rescaled to FWHM 2Γ.
    """
    if n_delta < 2:
        raise DomainError(f"n_delta must be >= 2, got {n_delta}")

    if line.kind is LineKind.LORENTZIAN:
        theta = -0.5 * np.pi + (np.arange(n_delta) + 0.5) * np.pi / n_delta
        nodes = line.half_width * np.tan(theta)
        weights = np.full(n_delta, 1.0 / n_delta)
    else:
        x, w = np.polynomial.hermite.hermgauss(n_delta)
        nodes = x * math.sqrt(2.0) * line.gaussian_sigma
        weights = w / math.sqrt(math.pi)
        weights = weights / weights.sum()

    return DetuningQuadrature(nodes, weights, line)


def line_density(line: LineShape, delta: ArrayLike) -> ArrayLike:
    """n(Δ), normalized to unit area"""
    delta = np.asarray(delta, dtype=float)
    if line.kind is LineKind.LORENTZIAN:
        g = line.half_width
        return g / (np.pi * (g * g + delta * delta))
    s = line.gaussian_sigma
    return np.exp(-0.5 * (delta / s) ** 2) / (s * math.sqrt(2.0 * math.pi))


def coupling_strength(line: LineShape) -> float:
    """
    Source coefficient β in ∂z E = ∓β ∫ n(Δ) P dΔ (z in units of 1/α).

    Chosen so a weak narrowband field keeps intensity e^{−αz}: β = 1/(2π n(0)).
    """
    return 1.0 / (2.0 * math.pi * float(line_density(line, 0.0)))


def dephasing_kernel(quadrature: DetuningQuadrature, t: ArrayLike) -> np.ndarray:
    """Σ wᵢ e^{−iΔᵢ t}"""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.exp(-1j * np.outer(t, quadrature.nodes)) @ quadrature.weights


def exact_dephasing_kernel(line: LineShape, t: ArrayLike) -> np.ndarray:
    """∫ n(Δ) e^{−iΔt} dΔ"""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if line.kind is LineKind.LORENTZIAN:
        return np.exp(-line.half_width * np.abs(t)).astype(complex)
    return np.exp(-0.5 * (line.gaussian_sigma * t) ** 2).astype(complex)


def dephasing_horizon(line: LineShape, tolerance: float) -> float:
    """Time after which |exact kernel|² stays below `tolerance`"""
    if not 0 < tolerance < 1:
        raise DomainError(f"tolerance must lie in (0, 1), got {tolerance}")
    if line.kind is LineKind.LORENTZIAN:
        return -math.log(tolerance) / (2.0 * line.half_width)
    return math.sqrt(-math.log(tolerance)) / line.gaussian_sigma


# ---------------------------------------------------------------------------
# Pulses
# ---------------------------------------------------------------------------

def pulse_energy(p: PulseEnvelope) -> float:
    """Σ|E(tᵢ)|²·dt"""
    return float(np.sum(np.abs(p.amplitude) ** 2) * p.grid.dt)


def normalize(p: PulseEnvelope) -> PulseEnvelope:
    energy = pulse_energy(p)
    if energy <= 0:
        raise DomainError("cannot normalize a pulse with zero energy")
    return p.scaled(1.0 / math.sqrt(energy))


def exponential_input(gammaT: float, grid: TimeGrid) -> PulseEnvelope:
    """
    Exponentially rising input √(2/T)·e^{t/T} for t ≤ 0, zero afterwards.

    Its spectrum is Lorentzian; the intensity rise time is T/2. The samples are
    rescaled so the discrete energy is exactly 1.
    """
    if not gammaT > 0:
        raise DomainError(f"gammaT must be > 0, got {gammaT}")
    t = grid.times
    amplitude = np.where(t <= 0.0, math.sqrt(2.0 / gammaT) * np.exp(np.minimum(t, 0.0) / gammaT), 0.0)
    return normalize(PulseEnvelope(grid, amplitude))


def gaussian_input(duration: float, grid: TimeGrid, center: Optional[float] = None) -> PulseEnvelope:
    """Gaussian envelope of intensity FWHM `duration`, cut to zero for t > 0"""
    if duration <= 0:
        raise DomainError(f"duration must be positive, got {duration}")
    if center is None:
        center = -2.0 * duration
    s = duration / (2.0 * math.sqrt(math.log(2.0)))  # amplitude width
    t = grid.times
    amplitude = np.where(t <= 0.0, np.exp(-0.5 * ((t - center) / s) ** 2), 0.0)
    return normalize(PulseEnvelope(grid, amplitude))


def time_reverse(p: PulseEnvelope) -> PulseEnvelope:
    """E(t) -> conj(E(−t)) on the mirrored grid"""
    return PulseEnvelope(p.grid.mirrored(), np.conj(p.amplitude[::-1]))


def embed(p: PulseEnvelope, grid: TimeGrid) -> PulseEnvelope:
    """Place a pulse on a larger grid with the same spacing, zero elsewhere"""
    offset = int(round((p.grid.t_min - grid.t_min) / grid.dt))
    if (not math.isclose(p.grid.dt, grid.dt, rel_tol=1e-9)
            or offset < 0 or offset + p.grid.n_points > grid.n_points):
        raise DomainError("pulse grid is not a sub-grid of the target grid")
    amplitude = np.zeros(grid.n_points, dtype=complex)
    amplitude[offset:offset + p.grid.n_points] = p.amplitude
    return PulseEnvelope(grid, amplitude)


def resample(p: PulseEnvelope, grid: TimeGrid) -> PulseEnvelope:
    """Linear interpolation onto another grid; zero outside the source window"""
    t = grid.times
    real = np.interp(t, p.times, p.amplitude.real, left=0.0, right=0.0)
    imag = np.interp(t, p.times, p.amplitude.imag, left=0.0, right=0.0)
    return PulseEnvelope(grid, real + 1j * imag)


def _inner(a: PulseEnvelope, b: PulseEnvelope) -> complex:
    if a.grid.n_points != b.grid.n_points:
        raise DomainError("pulses are sampled on different grids")
    return complex(np.vdot(a.amplitude, b.amplitude) * a.grid.dt)


def overlap(a: PulseEnvelope, b: PulseEnvelope) -> float:
    """|⟨â, b̂⟩|² of the normalized envelopes; 1 for identical shapes up to a phase"""
    ea, eb = pulse_energy(a), pulse_energy(b)
    if ea <= 0 or eb <= 0:
        return 0.0
    return abs(_inner(a, b)) ** 2 / (ea * eb)


def shape_distance(a: PulseEnvelope, b: PulseEnvelope) -> float:
    """min over φ of ‖â − e^{iφ} b̂‖ for unit-energy â, b̂"""
    ea, eb = pulse_energy(a), pulse_energy(b)
    if ea <= 0 or eb <= 0:
        return math.sqrt(2.0)
    c = abs(_inner(a, b)) / math.sqrt(ea * eb)
    return math.sqrt(max(0.0, 2.0 - 2.0 * c))
