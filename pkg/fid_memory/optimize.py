"""
Input Optimization
==================

Duration optimization of the exponential input (golden-section search over ΓT)
and shape optimization by repeated time reversal of the retrieved pulse.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterable, List, Optional, Tuple
import logging

import numpy as np

import config
from fid_memory import analytic
from fid_memory.core import (
    Direction,
    LineKind,
    MediumScenario,
    PulseEnvelope,
    TimeGrid,
    embed,
    exponential_input,
    normalize,
    overlap,
    pulse_energy,
    sample_distribution,
    shape_distance,
    time_reverse,
)
from fid_memory.errors import ConvergenceFlag, DomainError
from fid_memory.mbsolve import MemoryResult, run_memory
from fid_memory.search import dense_scan, golden_section_maximize  # noqa: F401  (re-exported)

logger = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-6
MAX_WINDOW_GROWTHS = 3


@dataclass
class DurationOptimum:
    gammaT_opt: float
    eta_opt: float
    n_evaluations: int
    history: List[Tuple[float, float]] = field(default_factory=list)
    method: str = 'golden'
    flags: List[ConvergenceFlag] = field(default_factory=list)

    def __post_init__(self):
        if not (0.0 <= self.eta_opt <= 1.0 + 1e-9):
            raise DomainError(f"eta_opt {self.eta_opt} outside [0, 1]")


@dataclass
class ShapeOptimum:
    pulse: PulseEnvelope
    eta_opt: float
    n_iterations: int             # time-reversal updates
    converged: bool
    n_runs: int = 0               # storage runs, the start shape included
    eta_history: List[float] = field(default_factory=list)
    distance_history: List[float] = field(default_factory=list)
    scenario: Optional[MediumScenario] = None
    flags: List[ConvergenceFlag] = field(default_factory=list)


class MemoryEvaluator:
    """η_total(ΓT) from the time-domain solver with an exponential input"""

    def __init__(self, scenario: MediumScenario):
        self.scenario = scenario
        self.quadrature = sample_distribution(scenario.line, scenario.n_delta)
        self.results: Dict[float, MemoryResult] = {}

    def __call__(self, gammaT: float) -> float:
        scenario = self.scenario.with_gammaT(gammaT)
        grid = scenario.time_grid()
        result = run_memory(exponential_input(gammaT, grid), scenario, self.quadrature)
        self.results[gammaT] = result
        return result.eta_total

    def flags_at(self, gammaT: float) -> List[ConvergenceFlag]:
        result = self.results.get(gammaT)
        return list(result.flags) if result else []


class AnalyticEvaluator:
    """η(ΓT) from the ω-quadrature formulas (Lorentzian line only)"""

    def __init__(self, scenario: MediumScenario):
        if scenario.line.kind is not LineKind.LORENTZIAN:
            raise DomainError("closed-form efficiencies exist for the Lorentzian line only")
        self.scenario = scenario
        self.formula = (analytic.backward_efficiency if scenario.direction is Direction.BACKWARD
                        else analytic.forward_efficiency)

    def __call__(self, gammaT: float) -> float:
        return self.formula(self.scenario.alphaL, gammaT)

    def flags_at(self, gammaT: float) -> List[ConvergenceFlag]:
        return []


def optimize_duration(scenario: MediumScenario,
                      bracket: Tuple[float, float] = config.OPTIMIZER_SETTINGS['bracket'],
                      evaluator: Optional[Callable[[float], float]] = None,
                      rel_tol: float = config.OPTIMIZER_SETTINGS['relative_tolerance']) -> DurationOptimum:
    """
    Find the ΓT of the exponential input that maximizes the memory efficiency.

    Args:
        scenario: Medium and resolutions; its gammaT is ignored
        bracket: Search interval for ΓT
        evaluator: η(ΓT); defaults to a full Maxwell–Bloch run per point
        rel_tol: Relative bracket width at termination

    Returns:
        DurationOptimum with every evaluation recorded
    """
    lo, hi = bracket
    if not (0 < lo < hi):
        raise DomainError(f"bracket must satisfy 0 < lo < hi, got {bracket}")
    if scenario.alphaL == 0:
        return DurationOptimum(gammaT_opt=hi, eta_opt=0.0, n_evaluations=0, method='trivial')

    evaluator = evaluator or MemoryEvaluator(scenario)
    logger.info("optimizing duration: alphaL=%.3g line=%s direction=%s", scenario.alphaL,
                scenario.line.kind.value, scenario.direction.value)
    search = golden_section_maximize(evaluator, lo, hi, rel_tol=rel_tol)

    flags = []
    if hasattr(evaluator, 'flags_at'):
        flags.extend(evaluator.flags_at(search.x_opt))
    if not search.unimodal:
        flags.append(ConvergenceFlag('optimize_duration', 'pre-scan not unimodal, dense scan used'))
    if search.at_edge:
        flags.append(ConvergenceFlag('optimize_duration', 'optimum on the bracket edge', search.x_opt))

    return DurationOptimum(
        gammaT_opt=search.x_opt,
        eta_opt=min(max(search.f_opt, 0.0), 1.0),
        n_evaluations=search.n_evaluations,
        history=search.history,
        method=search.method,
        flags=flags,
    )


def _enlarge_window(scenario: MediumScenario, pulse: PulseEnvelope) -> Tuple[MediumScenario, PulseEnvelope]:
    """Grow the window by the configured factor keeping dt; pulse is zero-padded"""
    growth = config.OPTIMIZER_SETTINGS['window_growth']
    old = pulse.grid
    half = old.n_points // 2
    new_half = int(round(half * growth))
    grid = TimeGrid(-new_half * old.dt, new_half * old.dt, 2 * new_half + 1)
    bigger = replace(scenario, window_factor=scenario.window_factor * growth, n_points=grid.n_points)
    logger.warning("retrieval tail exceeds the window, enlarging to W=%.1f (%d points)",
                   bigger.window_factor, grid.n_points)
    return bigger, embed(pulse, grid)


def optimize_shape(scenario: MediumScenario,
                   initial: Optional[PulseEnvelope] = None,
                   tol: float = config.OPTIMIZER_SETTINGS['shape_tolerance'],
                   max_iter: int = config.OPTIMIZER_SETTINGS['max_iterations']) -> ShapeOptimum:
    """
    Optimize the input shape by time-reversal iteration.

    The start shape is stored and retrieved once; each iteration then reverses
    the retrieved pulse in time, renormalizes it to unit energy and stores it
    again. Iteration stops when successive shapes differ by less than `tol`
    (phase-insensitive L2 distance) or the efficiency changes by less than `tol`.

    Args:
        scenario: Medium, direction and resolutions
        initial: Unit-energy start shape; the exponential input at scenario.gammaT by default
        tol: Convergence tolerance
        max_iter: Maximum number of time-reversal iterations

    Returns:
        ShapeOptimum holding the best evaluated input; converged=False when max_iter is hit
    """
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise DomainError(f"max_iter must be >= 1, got {max_iter}")
    if scenario.direction is Direction.FORWARD:
        logger.warning("forward shape optimization is experimental")

    current = initial if initial is not None else exponential_input(scenario.gammaT, scenario.time_grid())
    if abs(pulse_energy(current) - 1.0) > 1e-6:
        raise DomainError(f"initial pulse must have unit energy, got {pulse_energy(current):.6g}")

    if scenario.alphaL == 0:
        return ShapeOptimum(pulse=current, eta_opt=0.0, n_iterations=0, converged=True, n_runs=0,
                            eta_history=[0.0], scenario=scenario)

    quadrature = sample_distribution(scenario.line, scenario.n_delta)
    tail_limit = config.SOLVER_SETTINGS['tail_tolerance']
    etas: List[float] = []
    distances: List[float] = []
    flags: List[ConvergenceFlag] = []
    converged = False
    growths = 0
    result = None

    while True:
        result = run_memory(current, scenario, quadrature)
        if result.eta_total > 0 and result.tail_energy > tail_limit * result.eta_total:
            if growths < MAX_WINDOW_GROWTHS:
                scenario, current = _enlarge_window(scenario, current)
                growths += 1
                continue
            flags.append(ConvergenceFlag('optimize_shape', 'retrieved pulse still truncated by the window',
                                         result.tail_energy))

        eta = result.eta_total
        if etas and eta < etas[-1] - MONOTONE_SLACK:
            logger.warning("efficiency decreased from %.6f to %.6f", etas[-1], eta)
        etas.append(eta)
        logger.info("shape iteration %d: eta=%.5f", len(etas) - 1, eta)
        if len(etas) >= 2 and (abs(eta - etas[-2]) < tol or distances[-1] < tol):
            converged = True
            break
        if len(etas) > max_iter or pulse_energy(result.retrieved) <= 0:
            break

        reversed_pulse = embed(time_reverse(result.retrieved), current.grid)
        following = normalize(reversed_pulse)
        distances.append(shape_distance(following, current))
        current = following

    flags.extend(result.flags)
    if not converged:
        flags.append(ConvergenceFlag('optimize_shape', f"not converged after {len(etas) - 1} iterations"))
    return ShapeOptimum(
        pulse=current,
        eta_opt=min(max(etas[-1], 0.0), 1.0),
        n_iterations=len(etas) - 1,
        converged=converged,
        n_runs=len(etas),
        eta_history=etas,
        distance_history=distances,
        scenario=scenario,
        flags=flags,
    )


def exponential_overlap(pulse: PulseEnvelope, gammaT_values: Iterable[float]) -> Tuple[float, float]:
    """Best overlap of `pulse` with exponential inputs; returns (gammaT, overlap)"""
    best = (float('nan'), 0.0)
    for gammaT in gammaT_values:
        value = overlap(pulse, exponential_input(gammaT, pulse.grid))
        if value > best[1]:
            best = (float(gammaT), value)
    return best


def exponential_gammaT_grid(center: float, decades: float = 1.0, n: int = 81) -> np.ndarray:
    """Log-spaced ΓT values around `center` for exponential_overlap"""
    return np.geomspace(center * 10 ** (-decades), center * 10 ** decades, n)
