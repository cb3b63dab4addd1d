"""
Command Line Front-End
======================

Batch runs of the simulator: sweeps, optimizations, figure datasets and
feasibility reports, each written as a CSV plus a JSON manifest.

    python -m fid_memory.cli <mode> [--config FILE] [--out DIR] [--dense]
                             [--workers N] [--tol X] [--id N] ...

Exit codes: 0 success, 1 configuration error (nothing written),
2 numerical non-convergence (outputs written, flagged in the manifest).
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Literal, Optional, Tuple
import argparse
import logging
import sys

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

import config
from fid_memory import sweeps
from fid_memory.core import Direction, LineKind
from fid_memory.errors import ConfigError, DomainError
from fid_memory.feasibility import PROJECT_ROOT, load_crystal_specs
from report_utils import (
    config_hash,
    format_run_summary,
    write_dataset,
    write_manifest,
    write_text_report,
)

logger = logging.getLogger(__name__)

MODES = ('analytic', 'simulate', 'optimize-duration', 'optimize-shape', 'feasibility', 'figure', 'validate')
FIGURE_IDS = (2, 3, 4, 5, 6)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NONCONVERGED = 2

# keys that change where or how fast a run happens, not what it computes
NON_SEMANTIC_KEYS = ('output', 'workers', 'verbose')

VALIDATION_GRID = {
    'alphaL': [1.0, 5.0, 10.0, 40.0, 100.0],
    'gammaT': [0.01, 0.05, 0.1, 0.3, 1.0],
}


class SweepRange(BaseModel):
    model_config = ConfigDict(extra='forbid')

    start: float
    stop: float
    count: int = Field(ge=1)
    log: bool = False

    @model_validator(mode='after')
    def check_log(self):
        if self.log and (self.start <= 0 or self.stop <= 0):
            raise ValueError("log sweeps need positive start and stop")
        return self

    def values(self) -> List[float]:
        if self.count == 1:
            return [self.start]
        spaced = np.geomspace if self.log else np.linspace
        return [float(v) for v in spaced(self.start, self.stop, self.count)]


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    alphaL: float = Field(default=40.0, ge=0)
    gammaT: float = Field(default=0.1, gt=0)
    line: LineKind = LineKind.LORENTZIAN
    direction: Direction = Direction.BACKWARD


class ResolutionConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    n_z: Optional[int] = Field(default=None, ge=2)
    n_delta: Optional[int] = Field(default=None, ge=2)
    n_points: Optional[int] = Field(default=None, ge=16)
    window_factor: Optional[float] = Field(default=None, ge=15)


class RunConfig(BaseModel):
    """One batch run; unknown keys are rejected"""
    model_config = ConfigDict(extra='forbid')

    mode: Literal['analytic', 'simulate', 'optimize-duration', 'optimize-shape',
                  'feasibility', 'figure', 'validate']
    name: Optional[str] = None
    id: Optional[int] = None
    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    sweep: Dict[Literal['alphaL', 'gammaT'], SweepRange] = Field(default_factory=dict)
    resolution: ResolutionConfig = Field(default_factory=ResolutionConfig)
    output: str = config.CLI_SETTINGS['output_dir']
    workers: int = Field(default=config.CLI_SETTINGS['workers'], ge=1)
    dense: bool = False
    tol: float = Field(default=config.OPTIMIZER_SETTINGS['shape_tolerance'], gt=0)
    max_iter: int = Field(default=config.OPTIMIZER_SETTINGS['max_iterations'], ge=1)
    bracket: Tuple[float, float] = config.OPTIMIZER_SETTINGS['bracket']
    simulate: bool = False
    check_refinement: bool = False
    analytic_evaluator: bool = False
    crystal: Optional[str] = None
    crystal_file: str = config.FEASIBILITY_SETTINGS['data_file']
    tau_ratio: float = Field(default=config.FEASIBILITY_SETTINGS['tau_ratio'], gt=0, le=0.5)
    validation_threshold: float = Field(default=0.01, gt=0)

    @model_validator(mode='after')
    def check_mode(self):
        if self.mode == 'figure':
            if self.id not in FIGURE_IDS:
                raise ValueError(f"figure id must be one of {FIGURE_IDS}, got {self.id}")
        elif self.id is not None:
            raise ValueError("id is only valid in figure mode")
        if not 0 < self.bracket[0] < self.bracket[1]:
            raise ValueError(f"bracket must satisfy 0 < lo < hi, got {self.bracket}")
        if self.mode == 'feasibility' and not _resolve(self.crystal_file).exists():
            raise ValueError(f"crystal file not found: {self.crystal_file}")
        return self

    @property
    def dataset_name(self) -> str:
        if self.name:
            return self.name
        return f"figure{self.id}" if self.mode == 'figure' else self.mode.replace('-', '_')

    def effective_resolution(self) -> Dict:
        base = config.DESK_RESOLUTION if (self.mode == 'figure' and not self.dense) else config.RESOLUTION_DEFAULTS
        resolution = dict(base)
        resolution.update({k: v for k, v in self.resolution.model_dump().items() if v is not None})
        return resolution

    def semantic_settings(self) -> Dict:
        settings = self.model_dump(mode='json')
        for key in NON_SEMANTIC_KEYS:
            settings.pop(key, None)
        return settings


@dataclass
class Plan:
    """What a run evaluates and how the dataset looks"""
    func: Callable[..., Dict]
    points: List[Dict]
    columns: Dict[str, str]
    title: str


@dataclass
class RunOutcome:
    exit_code: int
    csv_path: Optional[Path] = None
    manifest_path: Optional[Path] = None
    rows: List[Dict] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)


def _resolve(path: str) -> Path:
    p = Path(path)
    if p.is_absolute() or p.exists():
        return p
    return PROJECT_ROOT / p


# ---------------------------------------------------------------------------
# Plans per mode
# ---------------------------------------------------------------------------

def _axis(cfg: RunConfig, name: str) -> List[float]:
    if name in cfg.sweep:
        return cfg.sweep[name].values()
    return [getattr(cfg.scenario, name)]


def _figure_axis(cfg: RunConfig, figure_id: int) -> List[float]:
    if 'alphaL' in cfg.sweep:
        return cfg.sweep['alphaL'].values()
    start, stop, desk, dense = config.FIGURE_SETTINGS[figure_id]['alphaL']
    return [float(v) for v in np.linspace(start, stop, dense if cfg.dense else desk)]


COMMON_MB_COLUMNS = {
    'eta_abs': 'absorption efficiency 1 - transmitted energy [1]',
    'eta_total': 'storage and retrieval efficiency [1]',
    'distortion': '1 - overlap with the time-reversed input [1]',
    'transmitted_energy': 'transmitted energy / input energy [1]',
    'tail_energy': 'energy retrieved after the grid window / input energy [1]',
    'window_converged': 'emission decayed before the maximum retrieval time [bool]',
}

STATUS_COLUMNS = {
    'success': 'point evaluated without error [bool]',
    'flags': 'non-convergence notes, empty when clean [text]',
}

DURATION_COLUMNS = {
    'alphaL': 'peak optical depth [1]',
    'gammaT_opt': 'optimal input time constant [1/Γ]',
    'eta_opt': 'duration-optimized efficiency [1]',
    'n_evaluations': 'efficiency evaluations [count]',
    'search': 'golden | dense | prescan | trivial',
}


def build_plan(cfg: RunConfig) -> Plan:
    """Translate a validated configuration into sweep points"""
    resolution = cfg.effective_resolution()
    bracket = list(cfg.bracket)
    line = cfg.scenario.line.value
    direction = cfg.scenario.direction.value

    if cfg.mode == 'analytic':
        points = [{'alphaL': a, 'gammaT': g} for g in _axis(cfg, 'gammaT') for a in _axis(cfg, 'alphaL')]
        columns = {
            'alphaL': 'peak optical depth [1]',
            'gammaT': 'input time constant [1/Γ]',
            'eta_abs': 'absorption efficiency [1]',
            'eta_coherent_abs': 'absorption weighted by 1/(1+ΓT) [1]',
            'eta_back': 'backward efficiency, ω-quadrature [1]',
            'eta_forward': 'forward efficiency, ω-quadrature [1]',
            'eta_back_asymptote': '1/(1+2ΓT) [1]',
            'eta_back_lowdepth': 'low-depth Taylor estimate, capped at 1 [1]',
        }
        return Plan(sweeps.analytic_point, points, columns, 'closed-form efficiencies, Lorentzian line')

    if cfg.mode == 'simulate':
        points = [{'alphaL': a, 'gammaT': g, 'line': line, 'direction': direction,
                   'resolution': resolution, 'check_refinement': cfg.check_refinement}
                  for g in _axis(cfg, 'gammaT') for a in _axis(cfg, 'alphaL')]
        columns = {'alphaL': 'peak optical depth [1]', 'gammaT': 'input time constant [1/Γ]',
                   'line': 'inhomogeneous line', 'direction': 'retrieval direction'}
        columns.update(COMMON_MB_COLUMNS)
        if cfg.check_refinement:
            columns['eta_total_refined'] = 'eta_total with dt, dz, detuning spacing halved [1]'
            columns['refinement_delta'] = 'largest efficiency change under refinement [1]'
        return Plan(sweeps.memory_point, points, columns, 'Maxwell-Bloch storage runs, exponential input')

    if cfg.mode == 'optimize-duration':
        points = [{'alphaL': a, 'line': line, 'direction': direction, 'resolution': resolution,
                   'bracket': bracket, 'use_analytic': cfg.analytic_evaluator}
                  for a in _axis(cfg, 'alphaL')]
        columns = {'line': 'inhomogeneous line', 'direction': 'retrieval direction'}
        columns.update(DURATION_COLUMNS)
        return Plan(sweeps.duration_point, points, columns, 'duration optimization of the exponential input')

    if cfg.mode == 'optimize-shape':
        points = [{'alphaL': a, 'line': line, 'direction': direction, 'resolution': resolution,
                   'bracket': bracket, 'tol': cfg.tol, 'max_iter': cfg.max_iter}
                  for a in _axis(cfg, 'alphaL')]
        return Plan(sweeps.shape_point, points, _shape_columns(), 'time-reversal shape optimization')

    if cfg.mode == 'feasibility':
        specs = load_crystal_specs(_resolve(cfg.crystal_file))
        names = [cfg.crystal] if cfg.crystal else list(specs)
        for name in names:
            if name not in specs:
                raise ConfigError(f"unknown crystal '{name}', expected one of {sorted(specs)}")
        points = [{'crystal': name, 'crystal_file': str(_resolve(cfg.crystal_file)), 'line': line,
                   'tau_ratio': cfg.tau_ratio, 'resolution': resolution, 'bracket': bracket}
                  for name in names]
        columns = {
            'crystal': 'crystal record',
            'line': 'inhomogeneous line',
            'alphaL': 'optical depth including passes [1]',
            'gammaT_opt': 'duration optimizer ΓT [1]',
            'eta_opt': 'duration-optimized efficiency [1]',
            'T_half_opt_ps': 'duration optimizer rise time T/2 [ps]',
            'operating_point': 'quoted rise time or duration optimum',
            'gammaT': 'operating ΓT [1]',
            'eta': 'efficiency at the operating point [1]',
            'T_half_ps': 'operating intensity rise time T/2 [ps]',
            'pi_pulse_duration_fs': 'π-pulse duration [fs]',
            'pi_pulse_energy_uJ': 'π-pulse energy [μJ]',
            'control_loss': 'τ/T [1]',
            'predicted_eta': 'efficiency after control loss [1]',
            'beam_diameter_um': 'beam diameter [μm]',
            'energy_reduction_vs_reference': 'reference π-pulse energy / this one [1]',
        }
        return Plan(sweeps.feasibility_point, points, columns, 'implementation feasibility')

    if cfg.mode == 'validate':
        alphas = cfg.sweep['alphaL'].values() if 'alphaL' in cfg.sweep else VALIDATION_GRID['alphaL']
        gammas = cfg.sweep['gammaT'].values() if 'gammaT' in cfg.sweep else VALIDATION_GRID['gammaT']
        points = [{'alphaL': a, 'gammaT': g, 'resolution': resolution,
                   'threshold': cfg.validation_threshold} for g in gammas for a in alphas]
        columns = {
            'alphaL': 'peak optical depth [1]',
            'gammaT': 'input time constant [1/Γ]',
            'eta_total_mb': 'time-domain backward efficiency [1]',
            'eta_total_analytic': 'ω-quadrature backward efficiency [1]',
            'rel_diff_total': '|Δη|/max(η, 0.01) [1]',
            'eta_abs_mb': 'time-domain absorption [1]',
            'eta_abs_formula': '1 - exp(-αLΓT/(1+ΓT)) [1]',
            'rel_diff_abs': '|Δη_abs|/max(η_abs, 0.01) [1]',
            'eta_bound': '1/(1+2ΓT), upper bound for the exponential input [1]',
            'above_bound': 'eta_total_mb exceeds the bound by more than 2e-3 [bool]',
            'discrepant': f'either difference above {cfg.validation_threshold:g} or above_bound [bool]',
        }
        return Plan(sweeps.validation_point, points, columns,
                    'time-domain solver against closed forms, Lorentzian line, backward')

    return _figure_plan(cfg, resolution, bracket)


def _shape_columns() -> Dict[str, str]:
    columns = {'line': 'inhomogeneous line', 'direction': 'retrieval direction'}
    columns.update(DURATION_COLUMNS)
    columns.update({
        'eta_shape': 'shape-optimized efficiency [1]',
        'gain': 'eta_shape - eta_opt [1]',
        'n_iterations': 'time-reversal iterations [count]',
        'n_runs': 'storage runs, start shape included [count]',
        'converged': 'shape iteration converged [bool]',
        'exponential_overlap': 'best overlap of the optimal shape with an exponential [1]',
    })
    return columns


def _figure_plan(cfg: RunConfig, resolution: Dict, bracket: List[float]) -> Plan:
    figure_id = cfg.id
    alphas = _figure_axis(cfg, figure_id)

    if figure_id in (2, 3):
        direction = 'backward' if figure_id == 2 else 'forward'
        gammas = cfg.sweep['gammaT'].values() if 'gammaT' in cfg.sweep else config.FIGURE_SETTINGS[figure_id]['gammaT']
        points = [{'alphaL': a, 'gammaT': g, 'direction': direction, 'resolution': resolution,
                   'simulate': cfg.simulate} for g in gammas for a in alphas]
        columns = {
            'gammaT': 'input time constant, one curve each [1/Γ]',
            'alphaL': 'peak optical depth [1]',
            'eta_analytic': f'{direction} efficiency, ω-quadrature [1]',
            'eta_asymptote': 'large-depth limit (backward only) [1]',
            'eta_mb': 'time-domain efficiency when simulate is set [1]',
        }
        return Plan(sweeps.curve_point, points, columns,
                    f'{direction} efficiency vs optical depth, Lorentzian line')

    if figure_id == 4:
        points = [{'alphaL': a, 'line': line, 'direction': direction, 'resolution': resolution,
                   'bracket': bracket, 'use_analytic': False}
                  for line in ('lorentzian', 'gaussian') for direction in ('forward', 'backward')
                  for a in alphas]
        columns = {'line': 'inhomogeneous line', 'direction': 'retrieval direction'}
        columns.update(DURATION_COLUMNS)
        return Plan(sweeps.duration_point, points, columns,
                    'duration-optimized efficiency, both lines and directions')

    if figure_id == 5:
        points = [{'alphaL': a, 'resolution': resolution, 'bracket': bracket,
                   'use_analytic': cfg.analytic_evaluator} for a in alphas]
        columns = dict(DURATION_COLUMNS)
        columns.update({
            'eta_formula': 'heuristic optimized efficiency [1]',
            'gammaT_formula': 'heuristic optimal ΓT = 1/(1+αL/4) [1]',
            'eta_coherent_scan': 'squared coherent absorption maximized over ΓT [1]',
        })
        return Plan(sweeps.formula_comparison_point, points, columns,
                    'numerical duration optimum against the heuristic formula, Lorentzian backward')

    points = [{'alphaL': a, 'line': 'gaussian', 'direction': 'backward', 'resolution': resolution,
               'bracket': bracket, 'tol': cfg.tol, 'max_iter': cfg.max_iter} for a in alphas]
    return Plan(sweeps.shape_point, points, _shape_columns(),
                'duration- and shape-optimized efficiency, Gaussian line, backward')


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------

def _collect_flags(rows: List[Dict]) -> List[str]:
    flags = []
    for index, row in enumerate(rows):
        if not row.get('success', False):
            flags.append(f"point {index + 1}: {row.get('message', 'failed')}")
        elif row.get('flags'):
            flags.append(f"point {index + 1}: {row['flags']}")
    return flags


def _add_reference_ratio(rows: List[Dict]):
    reference = config.FEASIBILITY_SETTINGS['reference_crystal']
    base = next((r for r in rows if r.get('crystal') == reference and r.get('success')), None)
    for row in rows:
        if base and row.get('success') and row.get('pi_pulse_energy_uJ'):
            row['energy_reduction_vs_reference'] = base['pi_pulse_energy_uJ'] / row['pi_pulse_energy_uJ']
        else:
            row['energy_reduction_vs_reference'] = float('nan')


def run(cfg: RunConfig, progress: bool = True) -> RunOutcome:
    """
    Execute a validated run configuration.

    Args:
        cfg: Run configuration
        progress: Print per-point status lines

    Returns:
        RunOutcome; exit_code 1 means nothing was written
    """
    try:
        plan = build_plan(cfg)
    except (ConfigError, DomainError) as e:
        print(f"❌ Configuration error: {e}")
        return RunOutcome(EXIT_CONFIG)

    resolution = cfg.effective_resolution()
    settings = cfg.semantic_settings()
    settings['resolution'] = resolution
    digest = config_hash(settings)

    if progress:
        print(f"🎯 {cfg.mode}: {len(plan.points)} point(s), config {digest}")
    rows = sweeps.run_sweep(plan.func, plan.points, workers=cfg.workers, progress=progress)

    if cfg.mode == 'feasibility':
        _add_reference_ratio(rows)

    out_dir = Path(cfg.output)
    columns = dict(plan.columns)
    columns.update(STATUS_COLUMNS)
    csv_path = write_dataset(out_dir / f"{cfg.dataset_name}.csv", rows, columns, digest, plan.title)
    outputs = [csv_path]

    if cfg.mode == 'feasibility':
        text = "\n\n".join(r['report_text'] for r in rows if r.get('success'))
        outputs.append(write_text_report(out_dir / f"{cfg.dataset_name}.txt", text))

    flags = _collect_flags(rows)
    extra = {'points': len(rows), 'mode': cfg.mode}
    if cfg.mode == 'validate':
        extra['discrepant_points'] = sum(1 for r in rows if r.get('discrepant'))
    manifest_path = write_manifest(csv_path, settings, digest, resolution, flags, extra)
    outputs.append(manifest_path)

    if progress:
        print(format_run_summary(cfg.mode, rows, flags, outputs))
    return RunOutcome(EXIT_NONCONVERGED if flags else EXIT_OK, csv_path, manifest_path, rows, flags)


def reproduce_figure(figure_id: int, output: Optional[str] = None, dense: bool = False,
                     workers: Optional[int] = None, progress: bool = True) -> RunOutcome:
    """Write the dataset for one figure (2-6) with default sweep settings"""
    data: Dict = {'mode': 'figure', 'id': figure_id, 'dense': dense}
    if output:
        data['output'] = output
    if workers:
        data['workers'] = workers
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as e:
        print(f"❌ Configuration error: {e}")
        return RunOutcome(EXIT_CONFIG)
    return run(cfg, progress=progress)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog='fid-memory',
                                     description="FID spin-wave memory simulator and optimizer")
    parser.add_argument('mode', choices=MODES, help="what to run")
    parser.add_argument('--config', type=Path, help="YAML run configuration")
    parser.add_argument('--out', dest='output', help="output directory")
    parser.add_argument('--dense', action='store_true', default=None, help="publication-density figure sweeps")
    parser.add_argument('--workers', type=int, help="parallel worker processes")
    parser.add_argument('--tol', type=float, help="shape-iteration tolerance")
    parser.add_argument('--max-iter', dest='max_iter', type=int, help="shape-iteration limit")
    parser.add_argument('--id', type=int, help="figure number (figure mode)")
    parser.add_argument('--name', help="dataset file stem")
    parser.add_argument('--alphaL', type=float, help="optical depth")
    parser.add_argument('--gammaT', type=float, help="input time constant in units of 1/Γ")
    parser.add_argument('--line', choices=[k.value for k in LineKind])
    parser.add_argument('--direction', choices=[d.value for d in Direction])
    parser.add_argument('--crystal', help="crystal record (feasibility mode)")
    parser.add_argument('--simulate', action='store_true', default=None,
                        help="add time-domain columns to figures 2 and 3")
    parser.add_argument('--check-refinement', dest='check_refinement', action='store_true', default=None)
    parser.add_argument('--analytic-evaluator', dest='analytic_evaluator', action='store_true', default=None,
                        help="optimize durations with the ω-quadrature formulas (Lorentzian only)")
    parser.add_argument('--verbose', '-v', action='store_true', help="debug logging")
    return parser.parse_args(argv)


def load_config(args: argparse.Namespace) -> RunConfig:
    """Merge the YAML file and the flags; flags win"""
    data: Dict = {}
    if args.config:
        try:
            with open(args.config, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config {args.config} is not a mapping")
        if data.get('mode', args.mode) != args.mode:
            raise ConfigError(f"config mode '{data['mode']}' conflicts with '{args.mode}'")
    data['mode'] = args.mode

    for key in ('output', 'dense', 'workers', 'tol', 'max_iter', 'id', 'name', 'crystal',
                'simulate', 'check_refinement', 'analytic_evaluator'):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    scenario = dict(data.get('scenario') or {})
    for key in ('alphaL', 'gammaT', 'line', 'direction'):
        value = getattr(args, key)
        if value is not None:
            scenario[key] = value
    if scenario:
        data['scenario'] = scenario

    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on bad arguments; here 2 means non-convergence
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )
    try:
        cfg = load_config(args)
    except ConfigError as e:
        print(f"❌ Configuration error: {e}")
        return EXIT_CONFIG
    return run(cfg).exit_code


if __name__ == '__main__':
    sys.exit(main())
