"""
Implementation Feasibility
==========================

Physical-units calculator for a rare-earth-doped crystal: Zeeman splittings,
optimal input duration in seconds, π-pulse energy and the loss caused by a
finite π-pulse duration.

Crystal records live in a versioned YAML file with an explicit unit for every
quantity; they are converted to SI on load.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union
import logging
import math

import yaml
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, ValidationError
from scipy import constants

import config
from fid_memory.core import Direction, LineShape, MediumScenario, exponential_input
from fid_memory.errors import ConfigError, ConvergenceFlag, DomainError
from fid_memory.mbsolve import run_memory
from fid_memory.optimize import DurationOptimum, optimize_duration

logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parent.parent

# Conversion factors to SI, per quantity kind
UNITS = {
    'length': {'m': 1.0, 'cm': 1e-2, 'mm': 1e-3, 'um': 1e-6, 'nm': 1e-9},
    'absorption': {'1/m': 1.0, '1/cm': 1e2, '1/mm': 1e3},
    # linewidths are quoted as ordinary frequency and stored as angular frequency
    'frequency': {'rad/s': 1.0, 'Hz': 2 * math.pi, 'MHz': 2e6 * math.pi, 'GHz': 2e9 * math.pi},
    'dipole': {'C*m': 1.0, 'debye': 1e-21 / constants.c},
    'time': {'s': 1.0, 'ms': 1e-3, 'us': 1e-6, 'ns': 1e-9, 'ps': 1e-12, 'fs': 1e-15},
}


@dataclass(frozen=True)
class CrystalSpec:
    """Crystal and beam parameters in SI units"""
    name: str
    wavelength: float            # m
    alpha: float                 # 1/m
    length: float                # m
    inhom_fwhm: float            # rad/s, equals 2Γ
    g_factors: Tuple[float, ...]
    dipole_moment: float         # C·m
    beam_diameter: float         # m
    passes: int = 1
    rayleigh_range: Optional[float] = None
    quoted_T_half: Optional[float] = None    # s, intensity rise time of a quoted design point
    notes: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for name in ('wavelength', 'alpha', 'length', 'inhom_fwhm', 'dipole_moment', 'beam_diameter'):
            if not getattr(self, name) > 0:
                raise DomainError(f"{self.name}: {name} must be strictly positive")
        if self.passes < 1:
            raise DomainError(f"{self.name}: passes must be >= 1")
        if not self.g_factors or any(g <= 0 for g in self.g_factors):
            raise DomainError(f"{self.name}: g factors must be positive")

    @property
    def alphaL(self) -> float:
        return self.alpha * self.length * self.passes

    @property
    def gamma(self) -> float:
        """Half width Γ in rad/s"""
        return self.inhom_fwhm / 2.0


@dataclass(frozen=True)
class FeasibilityReport:
    crystal: str
    line: str
    alphaL: float
    gammaT_opt: float
    eta_opt: float
    T_half_opt: float             # s
    operating_point: str          # quoted or optimized
    gammaT: float
    eta: float
    T_half: float                 # s
    pi_pulse_duration: float      # s
    pi_pulse_energy: float        # J
    control_loss_estimate: float
    predicted_eta: float
    beam_diameter: float          # m
    flags: Tuple[str, ...] = ()

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


# ---------------------------------------------------------------------------
# Data file
# ---------------------------------------------------------------------------

class Quantity(BaseModel):
    model_config = ConfigDict(extra='forbid')

    value: PositiveFloat
    unit: str
    provenance: Optional[str] = None


class CrystalRecord(BaseModel):
    model_config = ConfigDict(extra='forbid')

    wavelength: Quantity
    alpha: Quantity
    length: Quantity
    inhom_fwhm: Quantity
    g_factors: List[PositiveFloat] = Field(min_length=1)
    dipole_moment: Quantity
    beam_diameter: Quantity
    rayleigh_range: Optional[Quantity] = None
    quoted_T_half: Optional[Quantity] = None
    passes: int = Field(default=1, ge=1)
    notes: List[str] = Field(default_factory=list)


class CrystalFile(BaseModel):
    model_config = ConfigDict(extra='forbid')

    version: int
    crystals: Dict[str, CrystalRecord]


def _to_si(quantity: Quantity, kind: str, label: str) -> float:
    factors = UNITS[kind]
    if quantity.unit not in factors:
        raise ConfigError(f"{label}: unsupported unit '{quantity.unit}', expected one of {sorted(factors)}")
    return quantity.value * factors[quantity.unit]


def crystal_from_record(name: str, record: CrystalRecord) -> CrystalSpec:
    return CrystalSpec(
        name=name,
        wavelength=_to_si(record.wavelength, 'length', f"{name}.wavelength"),
        alpha=_to_si(record.alpha, 'absorption', f"{name}.alpha"),
        length=_to_si(record.length, 'length', f"{name}.length"),
        inhom_fwhm=_to_si(record.inhom_fwhm, 'frequency', f"{name}.inhom_fwhm"),
        g_factors=tuple(record.g_factors),
        dipole_moment=_to_si(record.dipole_moment, 'dipole', f"{name}.dipole_moment"),
        beam_diameter=_to_si(record.beam_diameter, 'length', f"{name}.beam_diameter"),
        passes=record.passes,
        rayleigh_range=(_to_si(record.rayleigh_range, 'length', f"{name}.rayleigh_range")
                        if record.rayleigh_range else None),
        quoted_T_half=(_to_si(record.quoted_T_half, 'time', f"{name}.quoted_T_half")
                       if record.quoted_T_half else None),
        notes=tuple(record.notes),
    )


def load_crystal_specs(path: Optional[Union[str, Path]] = None) -> Dict[str, CrystalSpec]:
    """
    Load crystal records from the YAML data file.

    Args:
        path: Data file; FEASIBILITY_SETTINGS['data_file'] (relative to the project root) by default

    Returns:
        Mapping from crystal name to CrystalSpec in SI units
    """
    path = Path(path or config.FEASIBILITY_SETTINGS['data_file'])
    if not path.is_absolute() and not path.exists():
        path = PROJECT_ROOT / path
    try:
        with open(path, 'r', encoding='utf-8') as f:
            raw = yaml.safe_load(f)
        data = CrystalFile.model_validate(raw)
    except FileNotFoundError as e:
        raise ConfigError(f"crystal data file not found: {path}") from e
    except (yaml.YAMLError, ValidationError) as e:
        raise ConfigError(f"invalid crystal data file {path}: {e}") from e

    specs = {name: crystal_from_record(name, record) for name, record in data.crystals.items()}
    logger.debug("loaded %d crystal records from %s (version %d)", len(specs), path, data.version)
    return specs


# ---------------------------------------------------------------------------
# Calculations
# ---------------------------------------------------------------------------

def zeeman_splitting(g_factor: float, B: float) -> float:
    """Doublet splitting g·μ_B·B in Hz"""
    if B < 0:
        raise DomainError(f"B must be >= 0, got {B}")
    return g_factor * config.FEASIBILITY_SETTINGS['bohr_magneton_ghz_per_tesla'] * 1e9 * B


def _default_optimizer(scenario: MediumScenario) -> DurationOptimum:
    return optimize_duration(scenario)


def _default_efficiency(scenario: MediumScenario) -> Tuple[float, List[ConvergenceFlag]]:
    result = run_memory(exponential_input(scenario.gammaT, scenario.time_grid()), scenario)
    return result.eta_total, list(result.flags)


def _scenario(spec: CrystalSpec, line: LineShape, gammaT: Optional[float] = None) -> MediumScenario:
    return MediumScenario(alphaL=spec.alphaL, gammaT=gammaT or config.OPTIMIZER_SETTINGS['bracket'][1],
                          line=line, direction=Direction.BACKWARD)


def optimal_input_duration(spec: CrystalSpec, line: LineShape,
                           optimizer: Callable[[MediumScenario], DurationOptimum] = _default_optimizer
                           ) -> Tuple[float, float]:
    """
    Optimal ΓT for the crystal and the matching intensity rise time T/2 in seconds.

    Args:
        spec: Crystal record
        line: Inhomogeneous line shape
        optimizer: Duration optimizer applied to the dimensionless scenario

    Returns:
        (gammaT_opt, T_half)
    """
    optimum = optimizer(_scenario(spec, line))
    return optimum.gammaT_opt, rise_time(spec, optimum.gammaT_opt)


def rise_time(spec: CrystalSpec, gammaT: float) -> float:
    """Intensity rise time T/2 in seconds for a given ΓT"""
    return gammaT / spec.gamma / 2.0


def implied_gammaT(spec: CrystalSpec, T_half: float) -> float:
    """ΓT corresponding to a quoted intensity rise time"""
    return 2.0 * T_half * spec.gamma


def pi_pulse_energy(spec: CrystalSpec, tau: float) -> float:
    """
    Energy of a square resonant π-pulse of duration tau over a flat-top beam.

    Rabi frequency ℘E/ħ with area π gives E = πħ/(℘τ); intensity ε₀cE²/2 over
    the disc πd²/4 for the duration τ gives ε₀cπ³ħ²d²/(8℘²τ).
    """
    if not tau > 0:
        raise DomainError(f"tau must be positive, got {tau}")
    field_amplitude = math.pi * constants.hbar / (spec.dipole_moment * tau)
    intensity = 0.5 * constants.epsilon_0 * constants.c * field_amplitude ** 2
    return intensity * math.pi * spec.beam_diameter ** 2 / 4.0 * tau


def backsolve_dipole_moment(energy: float, tau: float, beam_diameter: float) -> float:
    """Dipole moment for which pi_pulse_energy returns `energy`"""
    if not (energy > 0 and tau > 0 and beam_diameter > 0):
        raise DomainError("energy, tau and beam_diameter must be positive")
    return math.sqrt(constants.epsilon_0 * constants.c * math.pi ** 3 * constants.hbar ** 2
                     * beam_diameter ** 2 / (8.0 * energy * tau))


def rescale_focus(spec: CrystalSpec, new_length: float, alphaL: Optional[float] = None,
                  name: Optional[str] = None) -> CrystalSpec:
    """
    Shorter crystal with a proportionally tighter focus.

    The Rayleigh range is kept proportional to the crystal length, so the beam
    diameter scales as √length. If `alphaL` is given the absorption coefficient
    is adjusted to keep that optical depth.
    """
    if not new_length > 0:
        raise DomainError(f"new_length must be positive, got {new_length}")
    scale = new_length / spec.length
    alpha = spec.alpha if alphaL is None else alphaL / (new_length * spec.passes)
    return replace(
        spec,
        name=name or f"{spec.name} (L={new_length * 1e3:.3g} mm)",
        length=new_length,
        alpha=alpha,
        beam_diameter=spec.beam_diameter * math.sqrt(scale),
        rayleigh_range=spec.rayleigh_range * scale if spec.rayleigh_range else None,
    )


def feasibility_report(spec: CrystalSpec, line: LineShape,
                       tau_ratio: float = config.FEASIBILITY_SETTINGS['tau_ratio'],
                       optimizer: Callable[[MediumScenario], DurationOptimum] = _default_optimizer,
                       efficiency: Callable[[MediumScenario], Tuple[float, List[ConvergenceFlag]]] = _default_efficiency,
                       use_quoted: bool = True) -> FeasibilityReport:
    """
    Assemble the implementation numbers for one crystal.

    The duration optimizer always runs. When the record carries a quoted rise
    time and `use_quoted` is set, the π-pulse numbers are evaluated at that
    operating point and the optimizer's own ΓT is reported next to it;
    otherwise the optimum is the operating point.

    The π-pulse lasts tau_ratio times the storage pulse, whose duration is its
    intensity rise time T/2; the control loss is estimated as τ/T.

    Args:
        spec: Crystal record
        line: Inhomogeneous line shape used for the duration optimum
        tau_ratio: π-pulse duration as a fraction of T/2, in (0, 0.5]
        optimizer: Duration optimizer applied to the dimensionless scenario
        efficiency: (η, flags) of the exponential input at a given scenario
        use_quoted: Evaluate at the record's quoted rise time when it has one

    Returns:
        FeasibilityReport
    """
    if not (0 < tau_ratio <= 0.5):
        raise DomainError(f"tau_ratio must lie in (0, 0.5], got {tau_ratio}")

    optimum = optimizer(_scenario(spec, line))
    flags = [str(f) for f in optimum.flags]

    if use_quoted and spec.quoted_T_half:
        operating_point = 'quoted'
        gammaT = implied_gammaT(spec, spec.quoted_T_half)
        eta, eta_flags = efficiency(_scenario(spec, line, gammaT))
        flags.extend(str(f) for f in eta_flags)
    else:
        operating_point = 'optimized'
        gammaT, eta = optimum.gammaT_opt, optimum.eta_opt

    T = gammaT / spec.gamma
    tau = tau_ratio * T / 2.0
    control_loss = tau / T

    report = FeasibilityReport(
        crystal=spec.name,
        line=line.kind.value,
        alphaL=spec.alphaL,
        gammaT_opt=optimum.gammaT_opt,
        eta_opt=optimum.eta_opt,
        T_half_opt=rise_time(spec, optimum.gammaT_opt),
        operating_point=operating_point,
        gammaT=gammaT,
        eta=eta,
        T_half=T / 2.0,
        pi_pulse_duration=tau,
        pi_pulse_energy=pi_pulse_energy(spec, tau),
        control_loss_estimate=control_loss,
        predicted_eta=eta * (1.0 - control_loss),
        beam_diameter=spec.beam_diameter,
        flags=tuple(flags),
    )
    if operating_point == 'quoted':
        logger.info("%s: optimizer ΓT=%.3g (T/2=%.3g ps) against quoted ΓT=%.3g (T/2=%.3g ps)", spec.name,
                    report.gammaT_opt, report.T_half_opt * 1e12, gammaT, report.T_half * 1e12)
    logger.info("%s: alphaL=%.1f gammaT=%.3g T/2=%.3g ps E_pi=%.3g uJ", spec.name, report.alphaL,
                report.gammaT, report.T_half * 1e12, report.pi_pulse_energy * 1e6)
    return report


def energy_reduction_ratio(baseline: FeasibilityReport, variant: FeasibilityReport) -> float:
    """How many times less π-pulse energy the variant needs"""
    if not variant.pi_pulse_energy > 0:
        raise DomainError("variant π-pulse energy must be positive")
    return baseline.pi_pulse_energy / variant.pi_pulse_energy


def format_feasibility_report(report: FeasibilityReport, spec: CrystalSpec) -> str:
    """Human-readable summary of a feasibility report"""
    source = ("quoted rise time" if report.operating_point == 'quoted'
              else "duration optimum")
    lines = [
        "=" * 70,
        f"FEASIBILITY: {report.crystal} ({report.line} line)",
        "=" * 70,
        f"Optical depth αL:             {report.alphaL:.2f}"
        + (f"  ({spec.passes} passes)" if spec.passes > 1 else ""),
        f"Inhomogeneous FWHM 2Γ/2π:     {spec.inhom_fwhm / (2 * math.pi) / 1e9:.3g} GHz",
        f"Operating point:              {source}",
        f"ΓT:                           {report.gammaT:.4g}",
        f"Efficiency η:                 {report.eta:.4f}",
        f"Intensity rise time T/2:      {report.T_half * 1e12:.3f} ps",
        f"π-pulse duration τ:           {report.pi_pulse_duration * 1e15:.1f} fs",
        f"Beam diameter:                {report.beam_diameter * 1e6:.1f} μm",
        f"π-pulse energy:               {report.pi_pulse_energy * 1e6:.1f} μJ",
        f"Control loss estimate τ/T:    {report.control_loss_estimate:.3f}",
        f"Predicted efficiency:         {report.predicted_eta:.4f}",
        "",
        f"Duration optimizer:           ΓT = {report.gammaT_opt:.4g}, T/2 = {report.T_half_opt * 1e12:.3f} ps, "
        f"η = {report.eta_opt:.4f}",
    ]
    if report.operating_point == 'quoted':
        lines.append(f"Optimizer ΓT / quoted ΓT:     {report.gammaT_opt / report.gammaT:.3f}")
    lines.extend([
        "",
        "Zeeman splittings at 1 T:     "
        + ", ".join(f"g={g:g}: {zeeman_splitting(g, 1.0) / 1e9:.1f} GHz" for g in spec.g_factors),
    ])
    if spec.rayleigh_range:
        lines.append(f"Rayleigh range (not used in the energy): {spec.rayleigh_range * 1e3:.2f} mm")
    lines.append(
        f"Dipole moment: {spec.dipole_moment:.4e} C·m. The π-pulse energy is only as good as this "
        "value; when it was back-solved from a quoted pulse energy, reproducing that energy is by "
        "construction and not an independent prediction."
    )
    for note in spec.notes:
        lines.append(f"Note: {note}")
    for flag in report.flags:
        lines.append(f"⚠️ {flag}")
    lines.append("=" * 70)
    return "\n".join(lines)
