import json

import numpy as np
import pandas as pd
import pytest

import main as fftracer
from models.circuits import circuit_config
from models.spectra import PowerLawSpectrum, WhiteSpectrum

GRID = {'spacing': 'log', 'omega_min': 1e-3, 'omega_max': 1e3, 'points': 600}


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch, tmp_path):
    for name in ('FFTRACER_SETTINGS', 'FFTRACER_THREADS', 'FFTRACER_CACHE_ENABLED', 'FFTRACER_OUTPUT_DIR'):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)


def write_config(tmp_path, document, name='run.json'):
    path = tmp_path / name
    path.write_text(json.dumps(document))
    return str(path)


def spin_echo_config(tasks=('fidelity_ff',), **extra):
    return circuit_config('spin_echo', {'tau_idle': 1.0}, {'z': PowerLawSpectrum(1e-3, 1.0, 1e-2, 1e3)},
                          tasks, GRID, **extra)


def test_run_writes_task_outputs_and_manifest(tmp_path):
    path = write_config(tmp_path, spin_echo_config(('fidelity_ff', 'fidelity', 'correlation_infidelities',
                                                    'process')))
    out = tmp_path / 'out'
    assert fftracer.main(['run', path, '--output-dir', str(out)]) == fftracer.EXIT_OK

    ff = pd.read_csv(out / 'fidelity_ff.csv')
    assert list(ff.columns) == ['omega', 'F_z', 'F_total']
    assert len(ff) == GRID['points']
    matrix = pd.read_csv(out / 'correlation_infidelities.csv', index_col='gate')
    assert list(matrix.index) == ['idle_1', 'pi_x', 'idle_2']
    assert matrix.loc['idle_1', 'idle_2'] < 0

    manifest = json.loads((out / 'manifest.json').read_text())
    assert manifest['status'] == 'ok'
    assert set(manifest['outputs']) == {'fidelity_ff', 'fidelity', 'correlation_infidelities', 'process'}
    assert manifest['grid']['points'] == GRID['points']
    assert manifest['diagnostics']['process']['trace_preservation_defect'] < 1e-10
    fidelity = pd.read_csv(out / 'fidelity.csv')
    total = fidelity.set_index('channel').loc['total', 'infidelity']
    assert manifest['diagnostics']['correlation_infidelities']['total'] == pytest.approx(total, rel=1e-9)
    assert len(manifest['config_hash']) == 64


def test_outputs_are_reproducible(tmp_path):
    path = write_config(tmp_path, spin_echo_config(('fidelity_ff', 'correlation_ff')))
    for name in ('a', 'b'):
        assert fftracer.main(['run', path, '--output-dir', str(tmp_path / name)]) == 0
    for name in ('fidelity_ff.csv', 'correlation_ff.csv'):
        assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()
    first = json.loads((tmp_path / 'a' / 'manifest.json').read_text())
    second = json.loads((tmp_path / 'b' / 'manifest.json').read_text())
    assert first['config_hash'] == second['config_hash']


def test_undefined_channel_exits_with_config_error(tmp_path):
    document = circuit_config('spin_echo', {'tau_idle': 1.0}, {'x': WhiteSpectrum(1e-3)})
    path = write_config(tmp_path, document)
    out = tmp_path / 'out'
    assert fftracer.main(['run', path, '--output-dir', str(out)]) == fftracer.EXIT_CONFIG
    report = json.loads((out / 'error.json').read_text())
    assert report['status'] == 'error'
    assert report['type'] == 'ConfigError'
    assert any("'z'" in v['message'] for v in report['violations'])
    assert not (out / 'manifest.json').exists()


@pytest.mark.parametrize('error', [np.linalg.LinAlgError("SVD did not converge"),
                                   OSError(28, "No space left on device")])
def test_unexpected_failure_exits_with_an_error_report(tmp_path, monkeypatch, error):
    def fail(self, task):
        raise error
    monkeypatch.setattr(fftracer.Runner, 'run_task', fail)
    out = tmp_path / 'out'
    assert fftracer.main(['run', write_config(tmp_path, spin_echo_config()), '--output-dir', str(out)]) == 2
    report = json.loads((out / 'error.json').read_text())
    assert report['type'] == type(error).__name__
    assert report['message'] == str(error)
    assert not (out / 'manifest.json').exists()


def test_malformed_inline_sequence_is_a_config_error(tmp_path):
    document = {
        'schema_version': 1,
        'sequence': {'dimension': 2, 'gate_boundaries': [0, 'one', 2],
                     'items': [{'type': 'segment', 'duration': 1.0, 'noise_operators': {'z': {'pauli': {'Z': 1.0}}}},
                               {'type': 'gate', 'unitary': {'pauli': {'X': [0, -1]}}}]},
        'channels': [{'name': 'z', 'spectrum': {'type': 'white', 's0': 1e-3}}],
        'tasks': ['fidelity'],
        'montecarlo': 5,
    }
    out = tmp_path / 'out'
    assert fftracer.main(['run', write_config(tmp_path, document), '--output-dir', str(out)]) == 2
    report = json.loads((out / 'error.json').read_text())
    assert report['type'] == 'ConfigError'
    assert {'sequence.gate_boundaries[1]', 'montecarlo'} <= {v['path'] for v in report['violations']}


def test_validate(tmp_path, capsys):
    assert fftracer.main(['validate', write_config(tmp_path, spin_echo_config())]) == 0
    assert json.loads(capsys.readouterr().out)['valid'] is True

    document = {
        'schema_version': 1,
        'sequence': {'dimension': 2, 'items': [{'type': 'segment', 'duration': -1.0,
                                                'noise_operators': {'z': {'pauli': {'Z': 1.0}}}}]},
        'channels': [{'name': 'z', 'spectrum': {'type': 'white', 's0': 1e-3}}],
        'tasks': ['fidelity', 'spectrogram'],
    }
    assert fftracer.main(['validate', write_config(tmp_path, document, 'bad.json')]) == fftracer.EXIT_CONFIG
    report = json.loads(capsys.readouterr().out)
    assert report['valid'] is False
    by_path = {v['path']: v['message'] for v in report['violations']}
    assert 'sequence.items[0].duration' in by_path
    assert 'montecarlo_check' in by_path['tasks[1]']


def test_seed_override(tmp_path):
    path = write_config(tmp_path, spin_echo_config(seed=3))
    out = tmp_path / 'out'
    assert fftracer.main(['run', path, '--output-dir', str(out), '--seed', '17']) == 0
    assert json.loads((out / 'manifest.json').read_text())['seed'] == 17


def test_task_restricted_to_a_channel(tmp_path):
    document = {
        'schema_version': 1,
        'sequence': {'dimension': 2, 'items': [{'type': 'segment', 'duration': 1.0,
                                                'noise_operators': {'z': {'pauli': {'Z': 1.0}},
                                                                    'x': {'pauli': {'X': 1.0}}}}]},
        'channels': [{'name': 'z', 'spectrum': {'type': 'white', 's0': 1e-3}},
                     {'name': 'x', 'spectrum': {'type': 'white', 's0': 2e-3}}],
        'grid': GRID,
        'tasks': ['fidelity', {'name': 'fidelity', 'channels': ['x']}],
    }
    out = tmp_path / 'out'
    assert fftracer.main(['run', write_config(tmp_path, document), '--output-dir', str(out)]) == 0
    both = pd.read_csv(out / 'fidelity.csv').set_index('channel')
    only_x = pd.read_csv(out / 'fidelity_x.csv').set_index('channel')
    assert list(only_x.index) == ['x', 'total']
    assert only_x.loc['x', 'infidelity'] == pytest.approx(both.loc['x', 'infidelity'], rel=1e-12)
    assert both.loc['total', 'infidelity'] == pytest.approx(
        both.loc['x', 'infidelity'] + both.loc['z', 'infidelity'])


def test_montecarlo_check_task(tmp_path):
    document = circuit_config('fid', {'tau': 1.0}, {'z': WhiteSpectrum(1e-3)}, ('montecarlo_check',),
                              {'spacing': 'log', 'omega_min': 1e-4, 'omega_max': 1e4, 'points': 4000},
                              quadrature={'rule': 'trapezoid', 'end_corrections': True},
                              montecarlo={'n_trajectories': 50, 'steps_per_segment': 50,
                                          'dump_periodograms': True})
    out = tmp_path / 'out'
    assert fftracer.main(['run', write_config(tmp_path, document), '--output-dir', str(out)]) == 0
    table = pd.read_csv(out / 'montecarlo_check.csv')
    assert list(table.columns) == ['row', 'col', 'perturbative', 'montecarlo', 'standard_error',
                                   'deviation_in_se']
    assert len(table) == 16
    assert (out / 'periodogram_z.txt').exists()
    summary = json.loads((out / 'manifest.json').read_text())['diagnostics']['montecarlo_check']
    assert summary['n_trajectories'] == 50
    assert summary['perturbative_infidelity'] == pytest.approx(2e-3 / 3, rel=1e-2)


def test_persistent_cache_is_used(tmp_path, monkeypatch):
    monkeypatch.setenv('FFTRACER_CACHE_ENABLED', 'true')
    monkeypatch.setenv('FFTRACER_CACHE_PATH', str(tmp_path / 'cache.sqlite'))
    path = write_config(tmp_path, spin_echo_config(('correlation_ff',)))
    for name in ('a', 'b'):
        assert fftracer.main(['run', path, '--output-dir', str(tmp_path / name)]) == 0
    second = json.loads((tmp_path / 'b' / 'manifest.json').read_text())
    assert second['diagnostics']['gate_cache'] == {'hits': 3, 'misses': 0}
    assert (tmp_path / 'a' / 'correlation_ff.csv').read_bytes() == (tmp_path / 'b' / 'correlation_ff.csv').read_bytes()
