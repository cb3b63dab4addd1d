"""
Maxwell–Bloch Solver
====================

Time-domain integration of the field/coherence equations for storage with a
spin-wave transfer at t = 0 and forward or backward re-emission.

State: the polarization P(z, Δ) = σ/(i℘) on an (n_z × n_delta) grid and the
field E(z) along the medium. With z in units of 1/α and t in units of 1/Γ:

    ∂t P = −iΔ P + E
    ∂z E = ∓β Σ wᵢ Pᵢ          (− forward, + backward)

Each time step rotates P exactly by e^{−iΔ·dt} and integrates the drive exactly
for a field that varies linearly over the step (exponential integrator), so
detunings with |Δ|·dt > 1 respond as 1/Δ instead of as resonant absorbers. The
implicit spatial recurrence for the new field is then solved with a first-order
IIR filter (scipy.signal.lfilter) along z.

Energies are trapezoidal integrals of |E|² over t ≤ 0 (input, transmitted) and
t ≥ 0 (retrieved), so the jump at the π-pulse instant is counted once.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple
import logging
import math

import numpy as np
from scipy.integrate import trapezoid
from scipy.signal import lfilter

import config
from fid_memory.core import (
    Direction,
    DetuningQuadrature,
    MediumScenario,
    PulseEnvelope,
    TimeGrid,
    coupling_strength,
    dephasing_horizon,
    normalize,
    overlap,
    pulse_energy,
    resample,
    sample_distribution,
    time_reverse,
)
from fid_memory.errors import ConvergenceFlag, DomainError

logger = logging.getLogger(__name__)

MIN_SAMPLES_PER_T = 32
TAIL_MEMORY = 8
TAIL_STRIDE = 8          # tail step at most this many window steps
SERIES_CUTOFF = 1e-3     # |Δ·dt| below which the step weights use their Taylor series


def _energy(amplitude: np.ndarray, dt: float) -> float:
    """Trapezoidal ∫|E|²dt over uniformly spaced samples"""
    if len(amplitude) < 2:
        return 0.0
    return float(trapezoid(np.abs(amplitude) ** 2, dx=dt))


def _step_weights(nodes: np.ndarray, dt: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Rotation and drive weights of one exponential-integrator step.

    P(t+dt) = e^{−iΔdt}·P(t) + w_old·E(t) + w_new·E(t+dt) is exact for a field
    linear over the step; both weights tend to dt/2 as Δ → 0.
    """
    z = 1j * nodes * dt
    small = np.abs(z) < SERIES_CUTOFF
    zs = np.where(small, 1.0, z)
    phi1 = np.where(small, 1.0 - z / 2 + z ** 2 / 6 - z ** 3 / 24, -np.expm1(-zs) / zs)
    phi2 = np.where(small, 0.5 - z / 3 + z ** 2 / 8 - z ** 3 / 30, (1.0 - np.exp(-zs) * (1.0 + zs)) / zs ** 2)
    return np.exp(-z), dt * phi2, dt * (phi1 - phi2)


@dataclass(frozen=True)
class CoherenceField:
    """Snapshot of P(z, Δ) on the space × detuning grid"""
    values: np.ndarray = field(repr=False)
    z_grid: np.ndarray = field(repr=False)
    quadrature: DetuningQuadrature
    field_profile: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != (len(self.z_grid), len(self.quadrature)):
            raise DomainError(f"coherence shape {values.shape} does not match the grids")
        if not np.all(np.isfinite(values)):
            raise DomainError("coherence contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    def total_excitation(self) -> float:
        """Weighted Σ|P|² over Δ, integrated along z with the trapezoidal rule"""
        per_slice = np.abs(self.values) ** 2 @ self.quadrature.weights
        if len(self.z_grid) < 2 or self.z_grid[-1] == self.z_grid[0]:
            return 0.0
        return float(trapezoid(per_slice, self.z_grid))


@dataclass
class MemoryResult:
    transmitted: PulseEnvelope
    retrieved: PulseEnvelope
    eta_abs: float
    eta_total: float
    distortion: float
    transmitted_energy: float = 0.0
    tail_energy: float = 0.0
    window_converged: bool = True
    flags: List[ConvergenceFlag] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return not self.flags

    def to_dict(self) -> Dict:
        return {
            'eta_abs': self.eta_abs,
            'eta_total': self.eta_total,
            'distortion': self.distortion,
            'transmitted_energy': self.transmitted_energy,
            'tail_energy': self.tail_energy,
            'window_converged': self.window_converged,
            'flags': [str(f) for f in self.flags],
        }


@dataclass(frozen=True)
class RefinementReport:
    base: MemoryResult
    refined: MemoryResult
    delta_abs: float
    delta_total: float
    tolerance: float

    @property
    def converged(self) -> bool:
        return self.delta_abs <= self.tolerance and self.delta_total <= self.tolerance

    @property
    def flags(self) -> List[ConvergenceFlag]:
        if self.converged:
            return []
        return [ConvergenceFlag(
            'refinement',
            f"2x refinement moved eta_abs by {self.delta_abs:.2e} and eta_total by {self.delta_total:.2e}",
            max(self.delta_abs, self.delta_total),
        )]


class _Propagator:
    """One medium: quadrature, spatial grid and the per-step field recurrence"""

    def __init__(self, scenario: MediumScenario, quadrature: Optional[DetuningQuadrature] = None):
        self.scenario = scenario
        self.quadrature = quadrature or sample_distribution(scenario.line, scenario.n_delta)
        self.nodes = np.asarray(self.quadrature.nodes)
        self.weights = np.asarray(self.quadrature.weights)
        self.z = np.linspace(0.0, scenario.alphaL, scenario.n_z)
        self.dz = scenario.alphaL / (scenario.n_z - 1)
        self.beta = coupling_strength(scenario.line)
        self._coefficients: Dict[float, Tuple[np.ndarray, np.ndarray, np.ndarray, complex]] = {}

    def coefficients(self, dt: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray, complex]:
        """(rotation, w_old, w_new, Σ weights·w_new) for a step of length dt"""
        if dt not in self._coefficients:
            rotation, w_old, w_new = _step_weights(self.nodes, dt)
            self._coefficients[dt] = (rotation, w_old, w_new, complex(self.weights @ w_new))
        return self._coefficients[dt]

    def march(self, source: np.ndarray, boundary: complex, h: complex, sign: float) -> np.ndarray:
        """
        Solve dE/ds = sign·β·(S(s) + h·E) along the march coordinate s with the
        trapezoidal rule, E(s=0) = boundary. sign = −1 attenuates; h may be complex.
        """
        half = 0.5 * self.dz
        a = -sign * self.beta * h
        denom = 1.0 + a * half
        r = (1.0 - a * half) / denom
        c = sign * self.beta * half * (source[:-1] + source[1:]) / denom
        rest, _ = lfilter([1.0], [1.0, -r], c, zi=np.array([r * boundary], dtype=complex))
        return np.concatenate(([boundary], rest))

    def field(self, source: np.ndarray, boundary: complex, h: complex, direction: Direction) -> np.ndarray:
        """Field along z (index 0 at z = 0) for the given polarization sum"""
        if direction is Direction.FORWARD:
            return self.march(source, boundary, h, -1.0)
        # backward wave enters at z = L and is attenuated travelling toward z = 0
        return self.march(source[::-1], boundary, h, -1.0)[::-1]

    def step(self, P: np.ndarray, E: np.ndarray, dt: float, boundary: complex,
             direction: Direction) -> Tuple[np.ndarray, np.ndarray]:
        rotation, w_old, w_new, h = self.coefficients(dt)
        A = P * rotation + E[:, None] * w_old
        E_new = self.field(A @ self.weights, boundary, h, direction)
        return A + E_new[:, None] * w_new, E_new


def _check_resolution(scenario: MediumScenario, grid: TimeGrid) -> List[ConvergenceFlag]:
    flags = []
    samples = scenario.gammaT / grid.dt
    if samples < MIN_SAMPLES_PER_T:
        logger.warning("only %.1f time samples per input time constant", samples)
        flags.append(ConvergenceFlag('resolution', f"{samples:.1f} samples per T (< {MIN_SAMPLES_PER_T})", samples))
    return flags


def absorb(input_pulse: PulseEnvelope, scenario: MediumScenario,
           quadrature: Optional[DetuningQuadrature] = None) -> Tuple[PulseEnvelope, CoherenceField]:
    """
    Integrate the forward absorption from t_min to t = 0.

    Args:
        input_pulse: Field entering at z = 0; must vanish for t > 0
        scenario: Medium and resolutions
        quadrature: Optional precomputed detuning quadrature

    Returns:
        (transmitted pulse at z = L on [t_min, 0], coherence snapshot at t = 0⁻)
    """
    grid = input_pulse.grid
    zero = grid.zero_index
    if not math.isclose(grid.t_min + zero * grid.dt, 0.0, abs_tol=1e-9 * grid.duration):
        raise DomainError("t = 0 must be a node of the input grid")
    if np.any(input_pulse.amplitude[zero + 1:] != 0):
        raise DomainError("input pulse must vanish for t > 0")

    prop = _Propagator(scenario, quadrature)
    absorption_grid = TimeGrid(grid.t_min, 0.0, zero + 1)
    drive = input_pulse.amplitude[:zero + 1]

    if scenario.alphaL == 0:
        coherence = CoherenceField(np.zeros((scenario.n_z, scenario.n_delta)), prop.z,
                                   prop.quadrature, np.full(scenario.n_z, drive[-1]))
        return PulseEnvelope(absorption_grid, drive.copy()), coherence

    P = np.zeros((scenario.n_z, scenario.n_delta), dtype=complex)
    E = np.full(scenario.n_z, drive[0], dtype=complex)
    transmitted = np.empty(zero + 1, dtype=complex)
    transmitted[0] = E[-1]

    for k in range(zero):
        P, E = prop.step(P, E, grid.dt, drive[k + 1], Direction.FORWARD)
        transmitted[k + 1] = E[-1]

    logger.debug("absorption finished: %d steps, n_z=%d, n_delta=%d", zero, scenario.n_z, scenario.n_delta)
    return (PulseEnvelope(absorption_grid, transmitted),
            CoherenceField(P, prop.z, prop.quadrature, E.copy()))


def apply_pi_pulses(coherence: CoherenceField, direction: Direction) -> CoherenceField:
    """
    Transfer through the spin state and back with two instantaneous π-pulses.

    In the envelope representation both directions map the optical coherence
    onto the retrieval mode unchanged; the counter-propagating pair for the
    backward mode only flips the spatial phase, which the backward field
    equation already accounts for.
    """
    Direction(direction)
    return CoherenceField(coherence.values, coherence.z_grid, coherence.quadrature)


def retrieve(coherence: CoherenceField, scenario: MediumScenario,
             grid: Optional[TimeGrid] = None) -> PulseEnvelope:
    """Re-emitted field on the positive half of the scenario grid"""
    pulse, _, _ = _retrieve_with_tail(coherence, scenario, grid)
    return pulse


def _retrieve_with_tail(coherence: CoherenceField, scenario: MediumScenario,
                        grid: Optional[TimeGrid] = None) -> Tuple[PulseEnvelope, float, bool]:
    """
    Integrate re-emission over the grid window, then keep going with a coarser
    step until the energy still to come is negligible.

    Both stages end at the dephasing horizon of the line, where the exact kernel
    has decayed below the tail tolerance; past it a finite detuning quadrature
    only produces aliased revivals, so window samples beyond the horizon are
    left at zero. The tail also stops once the recent intensity implies less
    than the tail tolerance of energy left. The tail step is at most
    TAIL_STRIDE window steps and never shorter than one.

    Returns:
        (pulse on [0, t_max], energy emitted after t_max, window_converged)
    """
    grid = (grid or scenario.time_grid()).positive_half()
    direction = scenario.direction
    out_index = 0 if direction is Direction.BACKWARD else -1
    settings = config.SOLVER_SETTINGS
    tolerance = settings['tail_tolerance']
    horizon = dephasing_horizon(scenario.line, tolerance)

    if scenario.alphaL == 0 or not np.any(coherence.values):
        return PulseEnvelope(grid, np.zeros(grid.n_points)), 0.0, True

    prop = _Propagator(scenario, coherence.quadrature)
    P = np.array(coherence.values, dtype=complex)
    E = prop.field(P @ prop.weights, 0.0, 0.0, direction)

    n_window = min(grid.n_points, int(math.ceil(horizon / grid.dt)) + 1)
    output = np.zeros(grid.n_points, dtype=complex)
    output[0] = E[out_index]
    for k in range(1, n_window):
        P, E = prop.step(P, E, grid.dt, 0.0, direction)
        output[k] = E[out_index]
    pulse = PulseEnvelope(grid, output)

    if n_window < grid.n_points:
        logger.debug("retrieval stopped at the dephasing horizon %.3g after %d steps", horizon, n_window - 1)
        return pulse, 0.0, True

    coarse = max(grid.dt, min(settings['tail_step'], TAIL_STRIDE * grid.dt))
    limit = min(horizon, settings['max_retrieval_time'])
    emitted = _energy(output, grid.dt)

    def settled() -> bool:
        # remaining energy of an e^{-Γt} amplitude decay is |E|²/2
        return 0.5 * max(recent) <= tolerance * max(emitted, 1e-300) or t >= horizon

    recent = list(np.abs(output[-TAIL_MEMORY:]) ** 2)
    tail = [output[-1]]
    t = grid.t_max
    while not settled() and t < limit:
        P, E = prop.step(P, E, coarse, 0.0, direction)
        t += coarse
        tail.append(E[out_index])
        recent = recent[1:] + [abs(E[out_index]) ** 2]
        emitted += abs(E[out_index]) ** 2 * coarse

    converged = settled()
    if not converged:
        logger.warning("retrieval tail not settled at t=%.3g (dephasing horizon %.3g)", t, horizon)
    logger.debug("retrieval finished: %d window steps, %d tail steps of %.3g", grid.n_points - 1,
                 len(tail) - 1, coarse)
    return pulse, _energy(np.array(tail, dtype=complex), coarse), converged


def run_memory(input_pulse: PulseEnvelope, scenario: MediumScenario,
               quadrature: Optional[DetuningQuadrature] = None) -> MemoryResult:
    """
    Store the input, transfer it with the π-pulse pair and retrieve it.

    Args:
        input_pulse: Input field on the scenario's symmetric time grid
        scenario: Medium, retrieval direction and resolutions
        quadrature: Optional precomputed detuning quadrature

    Returns:
        MemoryResult with efficiencies relative to the input energy
    """
    grid = input_pulse.grid
    input_energy = _energy(input_pulse.amplitude[:grid.zero_index + 1], grid.dt)
    if input_energy <= 0:
        raise DomainError("input pulse carries no energy")
    flags = _check_resolution(scenario, grid)

    transmitted, coherence = absorb(input_pulse, scenario, quadrature)
    stored = apply_pi_pulses(coherence, scenario.direction)
    retrieved, tail_energy, window_converged = _retrieve_with_tail(stored, scenario, grid)

    transmitted_energy = _energy(transmitted.amplitude, grid.dt)
    eta_abs = 1.0 - transmitted_energy / input_energy
    eta_total = (_energy(retrieved.amplitude, grid.dt) + tail_energy) / input_energy

    reversed_input = time_reverse(input_pulse)
    target = PulseEnvelope(retrieved.grid, reversed_input.amplitude[grid.zero_index:])
    distortion = 1.0 - overlap(retrieved, target) if pulse_energy(retrieved) > 0 else 1.0

    if not window_converged:
        flags.append(ConvergenceFlag('retrieval', 'emission had not decayed at the maximum retrieval time',
                                     tail_energy / input_energy))
    passivity = transmitted_energy / input_energy + eta_total - 1.0
    if passivity > config.SOLVER_SETTINGS['passivity_tolerance']:
        logger.warning("output exceeds input energy by %.2e", passivity)
        flags.append(ConvergenceFlag('passivity', 'transmitted + retrieved energy exceeds the input', passivity))

    logger.debug("alphaL=%.3g gammaT=%.3g %s: eta_abs=%.4f eta_total=%.4f",
                 scenario.alphaL, scenario.gammaT, scenario.direction.value, eta_abs, eta_total)
    return MemoryResult(
        transmitted=transmitted,
        retrieved=retrieved,
        eta_abs=float(eta_abs),
        eta_total=float(eta_total),
        distortion=float(distortion),
        transmitted_energy=float(transmitted_energy / input_energy),
        tail_energy=float(tail_energy / input_energy),
        window_converged=window_converged,
        flags=flags,
    )


def refinement_check(input_pulse: PulseEnvelope, scenario: MediumScenario,
                     tolerance: float = config.SOLVER_SETTINGS['refinement_tolerance']) -> RefinementReport:
    """Rerun with dt, dz and the detuning spacing refined twofold and compare efficiencies"""
    base = run_memory(input_pulse, scenario)
    fine_scenario = scenario.refined(2)
    fine_grid = fine_scenario.time_grid()
    fine_input = normalize(resample(input_pulse, fine_grid)).scaled(math.sqrt(pulse_energy(input_pulse)))
    refined = run_memory(fine_input, fine_scenario)
    report = RefinementReport(
        base=base,
        refined=refined,
        delta_abs=abs(refined.eta_abs - base.eta_abs),
        delta_total=abs(refined.eta_total - base.eta_total),
        tolerance=tolerance,
    )
    if not report.converged:
        logger.warning("grid refinement not converged: %s", report.flags[0])
    return report
