"""
Tests for the command-line front-end: configuration handling, exit codes and outputs
"""

import json
import sys
from pathlib import Path

import pytest
import yaml

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

from fid_memory.analytic import backward_efficiency_asymptote
from fid_memory.cli import EXIT_CONFIG, EXIT_OK, RunConfig, main, reproduce_figure, run
from report_utils import read_dataset


def _write_config(tmp_path, data, name='run.yaml'):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data), encoding='utf-8')
    return path


def test_unknown_figure_is_a_config_error(tmp_path):
    """Invalid figure ids exit with 1 and write nothing"""
    print("Test 1: invalid figure id")
    print("-" * 50)

    out = tmp_path / 'out'
    code = main(['figure', '--id', '7', '--out', str(out), '--workers', '1'])
    assert code == EXIT_CONFIG
    assert not out.exists()
    assert reproduce_figure(1, output=str(out), workers=1, progress=False).exit_code == EXIT_CONFIG
    assert not out.exists()
    print("  ✓ exit code 1, no output directory")
    print("✅ Test 1 PASSED\n")


def test_unknown_config_key_is_rejected(tmp_path):
    path = _write_config(tmp_path, {'mode': 'analytic', 'colour': 'blue'})
    assert main(['analytic', '--config', str(path), '--out', str(tmp_path / 'out')]) == EXIT_CONFIG
    assert not (tmp_path / 'out').exists()


def test_mode_conflict_and_bad_arguments(tmp_path):
    path = _write_config(tmp_path, {'mode': 'simulate'})
    assert main(['analytic', '--config', str(path)]) == EXIT_CONFIG
    assert main(['transmogrify']) == EXIT_CONFIG
    assert main(['analytic', '--config', str(tmp_path / 'missing.yaml')]) == EXIT_CONFIG


def test_analytic_run_is_reproducible(tmp_path):
    """Same configuration, byte-identical dataset"""
    print("Test 2: analytic run")
    print("-" * 50)

    out = tmp_path / 'out'
    args = ['analytic', '--out', str(out), '--workers', '1', '--alphaL', '10', '--gammaT', '0.1']
    assert main(args) == EXIT_OK
    csv_path = out / 'analytic.csv'
    manifest_path = out / 'analytic.manifest.json'
    first = csv_path.read_bytes()
    assert manifest_path.exists()

    assert main(args) == EXIT_OK
    assert csv_path.read_bytes() == first
    print("  ✓ rerun produced a byte-identical CSV")

    data = read_dataset(csv_path)
    assert len(data) == 1
    assert data['eta_abs'].iloc[0] == pytest.approx(0.5972, abs=1e-4)
    assert bool(data['success'].iloc[0])

    manifest = json.loads(manifest_path.read_text(encoding='utf-8'))
    assert manifest['non_convergence'] is False
    assert manifest['dataset'] == 'analytic.csv'
    assert manifest['config_hash'] in first.decode('utf-8')
    assert 'output' not in manifest['config']
    print("  ✓ manifest records the configuration hash")
    print("✅ Test 2 PASSED\n")


def test_backward_curve_figure_reaches_the_asymptote(tmp_path):
    """Figure 2 dataset at large depth matches 1/(1+2ΓT)"""
    cfg = RunConfig.model_validate({
        'mode': 'figure',
        'id': 2,
        'output': str(tmp_path),
        'workers': 1,
        'sweep': {
            'alphaL': {'start': 500, 'stop': 500, 'count': 1},
            'gammaT': {'start': 0.05, 'stop': 0.1, 'count': 2},
        },
    })
    outcome = run(cfg, progress=False)
    assert outcome.exit_code == EXIT_OK
    assert outcome.csv_path.name == 'figure2.csv'
    for row in outcome.rows:
        assert row['eta_analytic'] == pytest.approx(backward_efficiency_asymptote(row['gammaT']), abs=1e-3)


def test_under_resolved_points_exit_with_2(tmp_path):
    """Flagged points are written and reported in the manifest"""
    cfg = RunConfig.model_validate({
        'mode': 'figure',
        'id': 2,
        'output': str(tmp_path),
        'workers': 1,
        'bracket': [1e-3, 1.0],
        'sweep': {
            'alphaL': {'start': 10, 'stop': 10, 'count': 1},
            'gammaT': {'start': 0.1, 'stop': 0.1, 'count': 1},
        },
        'simulate': True,
        'resolution': {'n_z': 21, 'n_delta': 32, 'n_points': 257},
    })
    outcome = run(cfg, progress=False)
    # 257 points leave 8 samples per T; the solver flags the resolution
    assert outcome.exit_code == 2
    assert outcome.flags
    manifest = json.loads(outcome.manifest_path.read_text(encoding='utf-8'))
    assert manifest['non_convergence'] is True


def test_feasibility_needs_a_known_crystal(tmp_path):
    cfg = RunConfig.model_validate({'mode': 'feasibility', 'crystal': 'Unobtainium',
                                    'output': str(tmp_path / 'out'), 'workers': 1})
    assert run(cfg, progress=False).exit_code == EXIT_CONFIG
    assert not (tmp_path / 'out').exists()


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig.model_validate({'mode': 'analytic', 'id': 2})
    with pytest.raises(ValueError):
        RunConfig.model_validate({'mode': 'analytic', 'bracket': [1.0, 0.1]})
    with pytest.raises(ValueError):
        RunConfig.model_validate({'mode': 'analytic', 'sweep': {'alphaL': {'start': 0, 'stop': 10,
                                                                           'count': 5, 'log': True}}})
    cfg = RunConfig.model_validate({'mode': 'figure', 'id': 4})
    assert cfg.dataset_name == 'figure4'
    assert cfg.effective_resolution()['n_delta'] == 256
    dense = RunConfig.model_validate({'mode': 'figure', 'id': 4, 'dense': True})
    assert dense.effective_resolution()['n_delta'] == 512


def test_bundled_feasibility_config_uses_the_gaussian_line():
    path = Path(__file__).parent / 'configs' / 'feasibility.yaml'
    data = yaml.safe_load(path.read_text(encoding='utf-8'))
    cfg = RunConfig.model_validate(data)
    assert cfg.mode == 'feasibility'
    assert cfg.scenario.line.value == 'gaussian'
