"""
Parallel Sweeps
===============

Evaluates independent sweep points in a process pool and gathers them back in
sweep order. Each point is wrapped so that a failure becomes a result dict with
success=False and a message instead of aborting the sweep.
"""

from concurrent.futures import ProcessPoolExecutor, TimeoutError, as_completed
from typing import Callable, Dict, List, Optional
import logging
import math
import time

from fid_memory import analytic, feasibility
from fid_memory.core import (
    Direction,
    LineKind,
    LineShape,
    MediumScenario,
    exponential_input,
)
from fid_memory.mbsolve import refinement_check, run_memory
from fid_memory.optimize import (
    AnalyticEvaluator,
    exponential_gammaT_grid,
    exponential_overlap,
    optimize_duration,
    optimize_shape,
)

logger = logging.getLogger(__name__)

# backward efficiency of an exponential input never exceeds 1/(1+2ΓT)
BOUND_SLACK = 2e-3


def evaluate_point(func: Callable[..., Dict], point: Dict) -> Dict:
    """
    Run one sweep point.

    Args:
        func: Point evaluator returning a row dict
        point: Keyword arguments for func

    Returns:
        Row dict with 'success' and, on failure, 'message'
    """
    try:
        row = dict(point)
        row.update(func(**point))
        row['success'] = True
        return row
    except Exception as e:
        logger.exception("sweep point %s failed", point)
        row = dict(point)
        row.update({'success': False, 'error': str(e), 'message': f'{type(e).__name__}: {e}'})
        return row


def run_sweep(func: Callable[..., Dict], points: List[Dict], workers: int = 1,
              timeout: Optional[float] = None, progress: bool = True) -> List[Dict]:
    """
    Evaluate every point, in parallel when workers > 1.

    Args:
        func: Picklable point evaluator (module-level function)
        points: Keyword-argument dicts, one per sweep point
        workers: Process count; 1 runs in-process
        timeout: Optional overall timeout in seconds
        progress: Print one status line per finished point

    Returns:
        Row dicts in the order of `points`
    """
    start_time = time.time()
    results: List[Optional[Dict]] = [None] * len(points)

    def report(index: int, row: Dict):
        if progress:
            label = ", ".join(f"{k}={v}" for k, v in points[index].items() if not isinstance(v, dict))
            if row['success']:
                print(f"  ✅ [{index + 1}/{len(points)}] {label}")
            else:
                print(f"  ❌ [{index + 1}/{len(points)}] {label}: {row.get('message', 'Failed')}")

    if workers <= 1 or len(points) <= 1:
        for index, point in enumerate(points):
            results[index] = evaluate_point(func, point)
            report(index, results[index])
    else:
        if progress:
            print(f"\n⚡ Running {len(points)} points on {workers} workers...")
        with ProcessPoolExecutor(max_workers=workers) as executor:
            future_to_index = {
                executor.submit(evaluate_point, func, point): index
                for index, point in enumerate(points)
            }
            try:
                for future in as_completed(future_to_index, timeout=timeout):
                    index = future_to_index[future]
                    try:
                        results[index] = future.result()
                    except Exception as e:
                        # worker died before evaluate_point could catch it
                        results[index] = dict(points[index], success=False, error=str(e),
                                              message=f'Worker failed: {e}')
                    report(index, results[index])
            except TimeoutError:
                print(f"  ⏱️  Sweep timeout exceeded ({timeout}s) - some points did not complete")
                for future, index in future_to_index.items():
                    if results[index] is None:
                        future.cancel()
                        results[index] = dict(points[index], success=False,
                                              message=f'Point did not complete within {timeout}s')

    elapsed = time.time() - start_time
    succeeded = sum(1 for r in results if r and r['success'])
    logger.info("sweep finished: %d/%d points in %.1fs", succeeded, len(points), elapsed)
    return results


# ---------------------------------------------------------------------------
# Point evaluators (module level so they pickle)
# ---------------------------------------------------------------------------

def _scenario(alphaL: float, gammaT: float, line: str, direction: str, resolution: Dict) -> MediumScenario:
    return MediumScenario(alphaL=alphaL, gammaT=gammaT, line=LineShape(LineKind(line)),
                          direction=Direction(direction), **resolution)


def _flags(flags) -> str:
    return "; ".join(str(f) for f in flags)


def analytic_point(alphaL: float, gammaT: float) -> Dict:
    """Every closed-form and quadrature efficiency at one (αL, ΓT)"""
    return {
        'eta_abs': analytic.absorption_efficiency(alphaL, gammaT),
        'eta_coherent_abs': analytic.coherent_absorption_efficiency(alphaL, gammaT),
        'eta_back': analytic.backward_efficiency(alphaL, gammaT),
        'eta_forward': analytic.forward_efficiency(alphaL, gammaT),
        'eta_back_asymptote': analytic.backward_efficiency_asymptote(gammaT),
        'eta_back_lowdepth': min(analytic.backward_efficiency_lowdepth(alphaL, gammaT), 1.0),
        'flags': '',
    }


def memory_point(alphaL: float, gammaT: float, line: str, direction: str, resolution: Dict,
                 check_refinement: bool = False) -> Dict:
    """One time-domain storage run with the exponential input"""
    scenario = _scenario(alphaL, gammaT, line, direction, resolution)
    pulse = exponential_input(gammaT, scenario.time_grid())
    row = {}
    if check_refinement:
        report = refinement_check(pulse, scenario)
        result = report.base
        row.update({
            'eta_total_refined': report.refined.eta_total,
            'refinement_delta': max(report.delta_abs, report.delta_total),
        })
        flags = result.flags + report.flags
    else:
        result = run_memory(pulse, scenario)
        flags = result.flags
    row.update({
        'eta_abs': result.eta_abs,
        'eta_total': result.eta_total,
        'distortion': result.distortion,
        'transmitted_energy': result.transmitted_energy,
        'tail_energy': result.tail_energy,
        'window_converged': result.window_converged,
        'flags': _flags(flags),
    })
    return row


def duration_point(alphaL: float, line: str, direction: str, resolution: Dict,
                   bracket: List[float], use_analytic: bool = False) -> Dict:
    """Duration-optimized efficiency at one optical depth"""
    scenario = _scenario(alphaL, bracket[1], line, direction, resolution)
    evaluator = AnalyticEvaluator(scenario) if use_analytic and alphaL > 0 else None
    optimum = optimize_duration(scenario, tuple(bracket), evaluator=evaluator)
    return {
        'gammaT_opt': optimum.gammaT_opt,
        'eta_opt': optimum.eta_opt,
        'n_evaluations': optimum.n_evaluations,
        'search': optimum.method,
        'flags': _flags(optimum.flags),
    }


def shape_point(alphaL: float, line: str, direction: str, resolution: Dict, bracket: List[float],
                tol: float, max_iter: int) -> Dict:
    """Duration optimum followed by shape iteration from that exponential"""
    duration = duration_point(alphaL, line, direction, resolution, bracket)
    if alphaL == 0:
        return dict(duration, eta_shape=0.0, n_iterations=0, n_runs=0, converged=True, exponential_overlap=1.0,
                    gain=0.0)

    scenario = _scenario(alphaL, duration['gammaT_opt'], line, direction, resolution)
    shape = optimize_shape(scenario, tol=tol, max_iter=max_iter)
    _, best_overlap = exponential_overlap(shape.pulse, exponential_gammaT_grid(duration['gammaT_opt']))
    flags = [duration['flags']] if duration['flags'] else []
    flags.extend(str(f) for f in shape.flags)
    return dict(
        duration,
        eta_shape=shape.eta_opt,
        n_iterations=shape.n_iterations,
        n_runs=shape.n_runs,
        converged=shape.converged,
        exponential_overlap=best_overlap if not math.isnan(best_overlap) else 0.0,
        gain=shape.eta_opt - duration['eta_opt'],
        flags="; ".join(flags),
    )


def validation_point(alphaL: float, gammaT: float, resolution: Dict, threshold: float) -> Dict:
    """Time-domain run against the closed-form efficiencies (Lorentzian, backward)"""
    mb = memory_point(alphaL, gammaT, 'lorentzian', 'backward', resolution)
    eta_analytic = analytic.backward_efficiency(alphaL, gammaT)
    eta_abs_formula = analytic.absorption_efficiency(alphaL, gammaT)
    total_diff = abs(mb['eta_total'] - eta_analytic) / max(eta_analytic, 0.01)
    bound = analytic.backward_efficiency_asymptote(gammaT)
    above_bound = bool(mb['eta_total'] > bound + BOUND_SLACK)
    abs_diff = abs(mb['eta_abs'] - eta_abs_formula) / max(eta_abs_formula, 0.01)
    return {
        'eta_total_mb': mb['eta_total'],
        'eta_total_analytic': eta_analytic,
        'rel_diff_total': total_diff,
        'eta_abs_mb': mb['eta_abs'],
        'eta_abs_formula': eta_abs_formula,
        'rel_diff_abs': abs_diff,
        'eta_bound': bound,
        'above_bound': above_bound,
        'discrepant': bool(total_diff > threshold or abs_diff > threshold or above_bound),
        'flags': mb['flags'],
    }


def curve_point(alphaL: float, gammaT: float, direction: str, resolution: Dict,
                simulate: bool = False) -> Dict:
    """Closed-form retrieval efficiency, optionally next to the time-domain value"""
    if direction == Direction.BACKWARD.value:
        row = {'eta_analytic': analytic.backward_efficiency(alphaL, gammaT),
               'eta_asymptote': analytic.backward_efficiency_asymptote(gammaT)}
    else:
        row = {'eta_analytic': analytic.forward_efficiency(alphaL, gammaT),
               'eta_asymptote': 0.0}
    row['eta_mb'] = float('nan')
    row['flags'] = ''
    if simulate:
        mb = memory_point(alphaL, gammaT, 'lorentzian', direction, resolution)
        row['eta_mb'] = mb['eta_total']
        row['flags'] = mb['flags']
    return row


def formula_comparison_point(alphaL: float, resolution: Dict, bracket: List[float],
                             use_analytic: bool = False) -> Dict:
    """Numerical duration optimum (Lorentzian, backward) against the heuristic formula"""
    row = duration_point(alphaL, 'lorentzian', 'backward', resolution, bracket, use_analytic)
    row['eta_formula'] = analytic.optimized_backward_efficiency(alphaL)
    row['gammaT_formula'] = analytic.optimal_gammaT(alphaL)
    row['eta_coherent_scan'] = analytic.optimal_gammaT_by_scan(alphaL).value
    return row


def feasibility_point(crystal: str, crystal_file: str, line: str, tau_ratio: float,
                      resolution: Dict, bracket: List[float]) -> Dict:
    """Feasibility numbers for one crystal record"""
    specs = feasibility.load_crystal_specs(crystal_file)
    spec = specs[crystal]
    shape = LineShape(LineKind(line))

    def optimizer(scenario: MediumScenario):
        return optimize_duration(MediumScenario(alphaL=scenario.alphaL, gammaT=scenario.gammaT,
                                                line=scenario.line, direction=scenario.direction,
                                                **resolution), tuple(bracket))

    def efficiency(scenario: MediumScenario):
        scenario = MediumScenario(alphaL=scenario.alphaL, gammaT=scenario.gammaT, line=scenario.line,
                                  direction=scenario.direction, **resolution)
        result = run_memory(exponential_input(scenario.gammaT, scenario.time_grid()), scenario)
        return result.eta_total, result.flags

    report = feasibility.feasibility_report(spec, shape, tau_ratio, optimizer, efficiency)
    return {
        'alphaL': report.alphaL,
        'gammaT_opt': report.gammaT_opt,
        'eta_opt': report.eta_opt,
        'T_half_opt_ps': report.T_half_opt * 1e12,
        'operating_point': report.operating_point,
        'gammaT': report.gammaT,
        'eta': report.eta,
        'T_half_ps': report.T_half * 1e12,
        'pi_pulse_duration_fs': report.pi_pulse_duration * 1e15,
        'pi_pulse_energy_uJ': report.pi_pulse_energy * 1e6,
        'control_loss': report.control_loss_estimate,
        'predicted_eta': report.predicted_eta,
        'beam_diameter_um': report.beam_diameter * 1e6,
        'report_text': feasibility.format_feasibility_report(report, spec),
        'flags': _flags(report.flags),
    }
