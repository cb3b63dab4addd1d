"""
Tests for the physical-units feasibility calculator
"""

import math
import sys
from dataclasses import replace
from pathlib import Path

import pytest
import yaml

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

import config
from fid_memory import sweeps
from fid_memory.core import GAUSSIAN, LORENTZIAN
from fid_memory.errors import ConfigError, ConvergenceFlag, DomainError
from fid_memory.feasibility import (
    backsolve_dipole_moment,
    energy_reduction_ratio,
    feasibility_report,
    format_feasibility_report,
    implied_gammaT,
    load_crystal_specs,
    optimal_input_duration,
    pi_pulse_energy,
    rescale_focus,
    rise_time,
    zeeman_splitting,
)
from fid_memory.optimize import DurationOptimum


def _fixed_optimizer(gammaT, eta=0.8, seen=None):
    """Duration optimizer stub returning a fixed optimum"""
    def optimizer(scenario):
        if seen is not None:
            seen.append(scenario)
        return DurationOptimum(gammaT_opt=gammaT, eta_opt=eta, n_evaluations=1)
    return optimizer


@pytest.fixture(scope='module')
def crystals():
    return load_crystal_specs()


def test_crystal_file_loads(crystals):
    """Bundled data file converts to SI"""
    print("Test 1: crystal data file")
    print("-" * 50)

    spec = crystals['Nd:YVO4']
    assert spec.alpha == pytest.approx(4100.0)
    assert spec.length == pytest.approx(0.01)
    assert spec.alphaL == pytest.approx(41.0)
    assert spec.gamma == pytest.approx(2 * math.pi * 1.05e9)
    assert spec.beam_diameter == pytest.approx(50e-6)

    double = crystals['Nd:YVO4 double pass']
    assert double.passes == 2
    assert double.alphaL == pytest.approx(17.22)
    print(f"  ✓ αL = {spec.alphaL:.1f} single pass, {double.alphaL:.2f} double pass")
    print("✅ Test 1 PASSED\n")


def test_zeeman_splitting():
    assert zeeman_splitting(2.36, 1.0) == pytest.approx(33.03e9, rel=1e-3)
    assert zeeman_splitting(0.915, 0.0) == 0.0
    with pytest.raises(DomainError):
        zeeman_splitting(2.36, -1.0)


def test_pi_pulse_energy_reference_and_scaling(crystals):
    """600 μJ for 470 fs over 50 μm, with E ∝ d²/(℘²τ)"""
    print("Test 2: π-pulse energy")
    print("-" * 50)

    spec = crystals['Nd:YVO4']
    energy = pi_pulse_energy(spec, 470e-15)
    assert energy == pytest.approx(600e-6, rel=1e-3)
    print(f"  ✓ {energy * 1e6:.1f} μJ")

    assert pi_pulse_energy(spec, 940e-15) == pytest.approx(energy / 2, rel=1e-12)
    wider = rescale_focus(spec, 4 * spec.length)
    assert pi_pulse_energy(wider, 470e-15) == pytest.approx(4 * energy, rel=1e-12)
    assert backsolve_dipole_moment(600e-6, 470e-15, 50e-6) == pytest.approx(spec.dipole_moment, rel=1e-4)
    with pytest.raises(DomainError):
        pi_pulse_energy(spec, 0.0)
    print("  ✓ scaling with duration and beam area")
    print("✅ Test 2 PASSED\n")


def test_rescale_focus(crystals):
    """Rayleigh range ∝ length, diameter ∝ √length"""
    spec = crystals['Nd:YVO4']
    short = rescale_focus(spec, 2.1e-3)
    assert short.beam_diameter == pytest.approx(22.913e-6, rel=1e-4)
    assert short.rayleigh_range == pytest.approx(1.26e-3, rel=1e-9)
    assert short.passes == spec.passes

    kept = rescale_focus(spec, 2.1e-3, alphaL=17.22)
    assert kept.alphaL == pytest.approx(17.22)
    with pytest.raises(DomainError):
        rescale_focus(spec, 0.0)


def test_rise_time_conversions(crystals):
    spec = crystals['Nd:YVO4']
    assert rise_time(spec, 0.12) == pytest.approx(9.09e-12, rel=1e-3)
    assert implied_gammaT(spec, 4.7e-12) == pytest.approx(0.062, rel=1e-2)
    assert implied_gammaT(spec, rise_time(spec, 0.05)) == pytest.approx(0.05)


def test_optimal_input_duration_uses_the_crystal_depth(crystals):
    seen = []
    gammaT, T_half = optimal_input_duration(crystals['Nd:YVO4 double pass'], GAUSSIAN,
                                            optimizer=_fixed_optimizer(0.12, seen=seen))
    assert gammaT == 0.12
    assert T_half == pytest.approx(9.09e-12, rel=1e-3)
    assert seen[0].alphaL == pytest.approx(17.22)
    assert seen[0].line is GAUSSIAN


def _fixed_efficiency(eta=0.9, flags=()):
    """Quoted-point efficiency stub"""
    def efficiency(scenario):
        return eta, list(flags)
    return efficiency


def test_quoted_operating_point(crystals):
    """Quoted rise time sets ΓT, τ and the π-pulse energy"""
    print("Test 3: quoted operating point")
    print("-" * 50)

    spec = crystals['Nd:YVO4']
    assert spec.quoted_T_half == pytest.approx(4.7e-12)
    report = feasibility_report(spec, GAUSSIAN, optimizer=_fixed_optimizer(0.147, eta=0.93),
                                efficiency=_fixed_efficiency(0.78))
    assert report.operating_point == 'quoted'
    assert report.gammaT == pytest.approx(implied_gammaT(spec, 4.7e-12))
    assert report.gammaT == pytest.approx(0.062, rel=1e-2)
    assert report.T_half == pytest.approx(4.7e-12, rel=1e-9)
    assert report.pi_pulse_duration == pytest.approx(470e-15, rel=1e-9)
    assert report.pi_pulse_energy == pytest.approx(600e-6, rel=1e-3)
    assert report.control_loss_estimate == pytest.approx(0.05)
    assert report.eta == 0.78
    assert report.predicted_eta == pytest.approx(0.78 * 0.95)
    print(f"  ✓ T/2 = {report.T_half * 1e12:.2f} ps, E = {report.pi_pulse_energy * 1e6:.1f} μJ")

    # the optimizer's own duration is kept next to the quoted one
    assert report.gammaT_opt == 0.147
    assert report.eta_opt == 0.93
    assert report.T_half_opt == pytest.approx(rise_time(spec, 0.147))
    print("✅ Test 3 PASSED\n")


def test_optimized_operating_point(crystals):
    spec = crystals['Nd:YVO4']
    report = feasibility_report(spec, GAUSSIAN, optimizer=_fixed_optimizer(0.147, eta=0.93),
                                efficiency=_fixed_efficiency(0.5), use_quoted=False)
    assert report.operating_point == 'optimized'
    assert report.gammaT == report.gammaT_opt == 0.147
    assert report.eta == 0.93
    assert report.T_half == pytest.approx(report.T_half_opt)
    assert report.pi_pulse_duration == pytest.approx(0.1 * report.T_half)

    bare = replace(spec, quoted_T_half=None)
    assert feasibility_report(bare, GAUSSIAN, optimizer=_fixed_optimizer(0.147)).operating_point == 'optimized'


def test_energy_reduction_between_design_points(crystals):
    """Shorter double-pass crystal with a tighter focus and a longer input"""
    print("Test 4: energy reduction")
    print("-" * 50)

    baseline = feasibility_report(crystals['Nd:YVO4'], GAUSSIAN, optimizer=_fixed_optimizer(0.147),
                                  efficiency=_fixed_efficiency(0.78))
    variant = feasibility_report(crystals['Nd:YVO4 double pass'], GAUSSIAN,
                                 optimizer=_fixed_optimizer(0.3), efficiency=_fixed_efficiency(0.8))
    assert variant.T_half == pytest.approx(9.1e-12, rel=1e-9)
    assert variant.gammaT == pytest.approx(0.12, rel=1e-2)
    assert variant.pi_pulse_duration == pytest.approx(910e-15, rel=1e-9)

    ratio = energy_reduction_ratio(baseline, variant)
    assert ratio == pytest.approx((50 / 22.913) ** 2 * (9.1 / 4.7), rel=1e-6)
    assert ratio == pytest.approx(9.22, rel=1e-3)
    assert variant.predicted_eta == pytest.approx(0.8 * 0.95)
    print(f"  ✓ {ratio:.3f}x less π-pulse energy")
    print("✅ Test 4 PASSED\n")


def test_flags_reach_the_report(crystals):
    """Optimizer and quoted-point flags are both kept"""
    spec = crystals['Nd:YVO4']

    def optimizer(scenario):
        return DurationOptimum(gammaT_opt=0.147, eta_opt=0.93, n_evaluations=1,
                               flags=[ConvergenceFlag('optimize_duration', 'optimum on the bracket edge')])

    report = feasibility_report(spec, GAUSSIAN, optimizer=optimizer,
                                efficiency=_fixed_efficiency(0.78, [ConvergenceFlag('run_memory', 'dt too coarse')]))
    assert report.flags == ('optimize_duration: optimum on the bracket edge', 'run_memory: dt too coarse')
    text = format_feasibility_report(report, spec)
    assert 'run_memory: dt too coarse' in text
    assert 'Optimizer ΓT / quoted ΓT' in text


def test_report_formatting_and_validation(crystals):
    spec = crystals['Nd:YVO4']
    report = feasibility_report(spec, LORENTZIAN, optimizer=_fixed_optimizer(0.062),
                                efficiency=_fixed_efficiency())
    text = format_feasibility_report(report, spec)
    assert 'by construction' in text
    assert 'Nd:YVO4' in text
    assert 'quoted rise time' in text
    assert set(report.to_dict()) >= {'gammaT_opt', 'T_half_opt', 'gammaT', 'T_half', 'pi_pulse_energy',
                                     'predicted_eta', 'flags'}
    with pytest.raises(DomainError):
        feasibility_report(spec, LORENTZIAN, tau_ratio=0.6, optimizer=_fixed_optimizer(0.062))


@pytest.mark.slow
def test_reference_crystal_with_the_solver():
    """Gaussian αL=41: optimizer near 93 %, quoted 4.7 ps point below it"""
    print("Test 5: reference crystal")
    print("-" * 50)

    row = sweeps.feasibility_point('Nd:YVO4', 'data/crystals.yaml', 'gaussian', 0.1,
                                   {'n_z': 201, 'n_delta': 128, 'n_points': 2049},
                                   list(config.OPTIMIZER_SETTINGS['bracket']))
    assert row['operating_point'] == 'quoted'
    assert row['T_half_ps'] == pytest.approx(4.7, rel=1e-9)
    assert row['pi_pulse_duration_fs'] == pytest.approx(470.0, rel=1e-9)
    assert row['pi_pulse_energy_uJ'] == pytest.approx(600.0, rel=1e-3)
    assert row['eta_opt'] == pytest.approx(0.93, abs=1e-2)
    assert 0.1 < row['gammaT_opt'] < 0.2
    # T/2 of the duration optimum is more than twice the quoted one
    assert row['T_half_opt_ps'] > 2 * row['T_half_ps']
    assert row['eta'] == pytest.approx(0.78, abs=2e-2)
    assert row['eta'] < row['eta_opt']
    print(f"  ✓ optimizer ΓT={row['gammaT_opt']:.3f} η={row['eta_opt']:.3f}; quoted η={row['eta']:.3f}")
    print("✅ Test 5 PASSED\n")


def _record(**overrides):
    record = {
        'wavelength': {'value': 0.0879705, 'unit': 'mm'},
        'alpha': {'value': 4.1, 'unit': '1/mm'},
        'length': {'value': 1, 'unit': 'cm'},
        'inhom_fwhm': {'value': 2100, 'unit': 'MHz'},
        'g_factors': [2.36],
        'dipole_moment': {'value': 3.1848e-32, 'unit': 'C*m'},
        'beam_diameter': {'value': 0.05, 'unit': 'mm'},
    }
    record.update(overrides)
    return record


def _write(tmp_path, data):
    path = tmp_path / 'crystals.yaml'
    path.write_text(yaml.safe_dump(data), encoding='utf-8')
    return path


def test_units_are_converted(tmp_path):
    record = _record(quoted_T_half={'value': 4700, 'unit': 'fs'})
    path = _write(tmp_path, {'version': 1, 'crystals': {'test': record}})
    spec = load_crystal_specs(path)['test']
    assert spec.quoted_T_half == pytest.approx(4.7e-12)
    assert spec.wavelength == pytest.approx(87.9705e-6)
    assert spec.alpha == pytest.approx(4100.0)
    assert spec.inhom_fwhm == pytest.approx(2 * math.pi * 2.1e9)
    assert spec.beam_diameter == pytest.approx(50e-6)


@pytest.mark.parametrize("data", [
    {'version': 1, 'crystals': {'bad': _record(colour='blue')}},
    {'version': 1, 'crystals': {'bad': _record(alpha={'value': 4.1, 'unit': 'dB/mm'})}},
    {'version': 1, 'crystals': {'bad': _record(length={'value': -1, 'unit': 'cm'})}},
    {'crystals': {'bad': _record()}},
])
def test_invalid_crystal_files(tmp_path, data):
    with pytest.raises(ConfigError):
        load_crystal_specs(_write(tmp_path, data))


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_crystal_specs(tmp_path / 'nowhere.yaml')
    broken = tmp_path / 'broken.yaml'
    broken.write_text("version: [1\n", encoding='utf-8')
    with pytest.raises(ConfigError):
        load_crystal_specs(broken)
