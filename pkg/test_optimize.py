"""
Tests for the scalar search and the duration and shape optimizers
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

from fid_memory.analytic import optimal_gammaT, optimized_backward_efficiency
from fid_memory.core import GAUSSIAN, LORENTZIAN, MediumScenario, exponential_input, pulse_energy
from fid_memory.errors import DomainError
from fid_memory.optimize import (
    AnalyticEvaluator,
    MemoryEvaluator,
    exponential_gammaT_grid,
    exponential_overlap,
    optimize_duration,
    optimize_shape,
)
from fid_memory.search import dense_scan, golden_section_maximize, is_unimodal


def _bump(center, width=1.0, height=1.0):
    return lambda x: height * math.exp(-(math.log(x) - math.log(center)) ** 2 / width)


# ---------------------------------------------------------------------------
# Scalar search
# ---------------------------------------------------------------------------

def test_golden_section_finds_the_peak():
    """Log-space golden section on a smooth bump"""
    print("Test 1: golden-section search")
    print("-" * 50)

    result = golden_section_maximize(_bump(0.05), 1e-3, 1.0)
    assert result.method == 'golden'
    assert result.x_opt == pytest.approx(0.05, rel=5e-3)
    assert result.f_opt == pytest.approx(1.0, abs=1e-5)
    assert result.n_evaluations == len(result.history)
    assert result.unimodal and not result.at_edge
    print(f"  ✓ x_opt={result.x_opt:.5f} after {result.n_evaluations} evaluations")
    print("✅ Test 1 PASSED\n")


def test_golden_section_edge_and_bimodal_cases():
    edge = golden_section_maximize(lambda x: x, 1e-3, 1.0)
    assert edge.at_edge
    assert edge.x_opt == pytest.approx(1.0)

    bimodal = golden_section_maximize(lambda x: _bump(0.01, 0.1)(x) + _bump(0.3, 0.1, 0.9)(x), 1e-3, 1.0)
    assert bimodal.method == 'dense'
    assert not bimodal.unimodal
    assert bimodal.x_opt == pytest.approx(0.01, rel=0.15)

    flat = golden_section_maximize(lambda x: 0.0, 1e-3, 1.0)
    assert flat.method == 'prescan'
    assert flat.f_opt == 0.0


def test_search_argument_checks():
    with pytest.raises(DomainError):
        golden_section_maximize(lambda x: x, 1.0, 0.5)
    with pytest.raises(DomainError):
        dense_scan(lambda x: x, 0.0, 1.0)
    with pytest.raises(DomainError):
        dense_scan(lambda x: x, 0.1, 1.0, n=1)
    assert is_unimodal(np.array([0.1, 0.5, 0.9, 0.4]))
    assert not is_unimodal(np.array([0.1, 0.5, 0.2, 0.4]))


# ---------------------------------------------------------------------------
# Duration optimization
# ---------------------------------------------------------------------------

def test_duration_optimum_on_the_analytic_curve():
    """Backward optimum at αL = 40 reproduces the heuristic formula"""
    print("Test 2: duration optimization at αL = 40")
    print("-" * 50)

    scenario = MediumScenario(alphaL=40.0, gammaT=0.1)
    optimum = optimize_duration(scenario, evaluator=AnalyticEvaluator(scenario))
    assert optimum.eta_opt == pytest.approx(optimized_backward_efficiency(40), abs=1.5e-2)
    assert optimum.gammaT_opt == pytest.approx(optimal_gammaT(40), rel=0.2)
    assert optimum.method == 'golden'
    assert not optimum.flags
    print(f"  ✓ ΓT_opt={optimum.gammaT_opt:.4f}, η_opt={optimum.eta_opt:.4f}")
    print("✅ Test 2 PASSED\n")


def test_duration_trivial_and_invalid_cases():
    empty = MediumScenario(alphaL=0.0, gammaT=0.1)
    optimum = optimize_duration(empty)
    assert optimum.method == 'trivial'
    assert optimum.eta_opt == 0.0
    assert optimum.n_evaluations == 0

    with pytest.raises(DomainError):
        optimize_duration(MediumScenario(alphaL=10.0, gammaT=0.1), bracket=(0.5, 0.1))
    with pytest.raises(DomainError):
        AnalyticEvaluator(MediumScenario(alphaL=10.0, gammaT=0.1, line=GAUSSIAN))


def test_duration_edge_is_flagged():
    scenario = MediumScenario(alphaL=10.0, gammaT=0.1)
    optimum = optimize_duration(scenario, evaluator=lambda g: min(g, 1.0))
    assert any(flag.source == 'optimize_duration' for flag in optimum.flags)


@pytest.mark.slow
def test_gaussian_line_stores_better_than_lorentzian():
    """Optimized time-domain efficiency is higher for the Gaussian line at αL = 20"""
    print("Test 3: Gaussian versus Lorentzian line at αL = 20")
    print("-" * 50)

    results = {}
    for line, n_delta in ((LORENTZIAN, 256), (GAUSSIAN, 96)):
        scenario = MediumScenario(alphaL=20.0, gammaT=0.1, line=line,
                                  n_z=101, n_delta=n_delta, n_points=1025)
        evaluator = MemoryEvaluator(scenario)
        results[line.kind.value] = optimize_duration(scenario, evaluator=evaluator, rel_tol=1e-2)
        print(f"  ✓ {line.kind.value}: η_opt={results[line.kind.value].eta_opt:.4f}")

    assert results['gaussian'].eta_opt > results['lorentzian'].eta_opt
    print("✅ Test 3 PASSED\n")


@pytest.mark.slow
def test_optimal_duration_formula_against_the_solver():
    """αL = 40: the heuristic ΓT and its efficiency formula hold for the time-domain solver"""
    scenario = MediumScenario(alphaL=40.0, gammaT=0.1, n_z=201, n_delta=256, n_points=2049)
    evaluator = MemoryEvaluator(scenario)
    expected = optimized_backward_efficiency(40.0)
    assert expected == pytest.approx(0.7814, abs=1e-4)

    at_heuristic = evaluator(optimal_gammaT(40.0))
    assert at_heuristic == pytest.approx(expected, abs=1.5e-2)

    optimum = optimize_duration(scenario, evaluator=evaluator, rel_tol=1e-2)
    assert optimum.eta_opt == pytest.approx(expected, abs=1.5e-2)
    assert optimum.eta_opt >= at_heuristic - 1e-3
    assert optimum.gammaT_opt == pytest.approx(optimal_gammaT(40.0), rel=0.25)


# ---------------------------------------------------------------------------
# Shape optimization
# ---------------------------------------------------------------------------

def test_shape_iteration_bookkeeping():
    """Short run: unit-energy iterates and consistent histories"""
    scenario = MediumScenario(alphaL=5.0, gammaT=0.3, n_z=41, n_delta=64, n_points=513)
    optimum = optimize_shape(scenario, max_iter=2)
    assert 0 <= optimum.n_iterations <= 2
    assert optimum.n_runs == len(optimum.eta_history) == optimum.n_iterations + 1
    assert len(optimum.distance_history) == optimum.n_iterations
    assert pulse_energy(optimum.pulse) == pytest.approx(1.0, abs=1e-9)
    assert 0.0 <= optimum.eta_opt <= 1.0
    if not optimum.converged:
        assert any(flag.source == 'optimize_shape' for flag in optimum.flags)


def test_shape_argument_checks():
    scenario = MediumScenario(alphaL=5.0, gammaT=0.3, n_z=11, n_delta=16, n_points=257)
    with pytest.raises(DomainError):
        optimize_shape(scenario, tol=0.0)
    with pytest.raises(DomainError):
        optimize_shape(scenario, max_iter=0)
    loud = exponential_input(0.3, scenario.time_grid()).scaled(2.0)
    with pytest.raises(DomainError):
        optimize_shape(scenario, initial=loud)

    trivial = optimize_shape(MediumScenario(alphaL=0.0, gammaT=0.3, n_z=11, n_delta=16, n_points=257))
    assert trivial.converged
    assert trivial.eta_opt == 0.0


@pytest.mark.slow
def test_shape_iteration_improves_gaussian_storage():
    """Time-reversal iteration raises the backward efficiency step by step"""
    print("Test 4: shape iteration, Gaussian line, αL = 10")
    print("-" * 50)

    scenario = MediumScenario(alphaL=10.0, gammaT=0.3, line=GAUSSIAN,
                              n_z=101, n_delta=64, n_points=1025)
    optimum = optimize_shape(scenario, max_iter=6)
    etas = optimum.eta_history
    assert len(etas) >= 2
    assert np.all(np.diff(etas) > -5e-3)
    assert etas[-1] > etas[0]
    print(f"  ✓ efficiency {etas[0]:.4f} -> {etas[-1]:.4f} in {len(etas)} iterations")
    print("✅ Test 4 PASSED\n")


def test_exponential_overlap():
    """An exponential input is recognised as its own best exponential fit"""
    grid = MediumScenario(alphaL=1.0, gammaT=0.1, n_points=2049).time_grid()
    pulse = exponential_input(0.1, grid)
    gammaT, value = exponential_overlap(pulse, exponential_gammaT_grid(0.1))
    assert gammaT == pytest.approx(0.1, rel=1e-6)
    assert value == pytest.approx(1.0, abs=1e-9)


@pytest.mark.slow
def test_reference_crystal_duration_and_shape():
    """Gaussian αL = 41: about 93 % with the best exponential, 97 % after shaping"""
    print("Test 5: duration and shape optimization, Gaussian line, αL = 41")
    print("-" * 50)

    scenario = MediumScenario(alphaL=41.0, gammaT=0.1, line=GAUSSIAN, n_z=201, n_delta=128, n_points=2049)
    duration = optimize_duration(scenario, evaluator=MemoryEvaluator(scenario), rel_tol=1e-2)
    assert duration.eta_opt == pytest.approx(0.93, abs=1e-2)
    print(f"  ✓ ΓT_opt={duration.gammaT_opt:.3f}, η={duration.eta_opt:.4f}")

    shape = optimize_shape(scenario.with_gammaT(duration.gammaT_opt), max_iter=5)
    etas = shape.eta_history
    assert shape.n_iterations <= 5
    assert np.all(np.diff(etas) > -5e-3)
    assert shape.eta_opt == pytest.approx(0.97, abs=1e-2)
    assert shape.eta_opt - duration.eta_opt > 0.03
    print(f"  ✓ shaped η={shape.eta_opt:.4f} after {shape.n_iterations} time reversals")
    print("✅ Test 5 PASSED\n")
