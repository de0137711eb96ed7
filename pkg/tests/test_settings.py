import json

import pytest

from config.settings import Settings


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch, tmp_path):
    for name in ('FFTRACER_SETTINGS', 'FFTRACER_THREADS', 'FFTRACER_LOG_LEVEL', 'FFTRACER_OUTPUT_DIR',
                 'FFTRACER_CACHE_ENABLED', 'FFTRACER_CACHE_PATH'):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)


def test_defaults_are_valid():
    settings = Settings()
    assert settings.get('compute.threads') == 1
    assert settings.get('quadrature.rule') == 'simpson'
    assert settings.get('quadrature.end_corrections') is True
    assert settings.get('grid.spacing') == 'hybrid'
    assert settings.get('grid.points') == 2000
    assert settings.get('missing.key', 'fallback') == 'fallback'
    assert settings.validate_config() == {'errors': [], 'warnings': []}


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv('FFTRACER_THREADS', '1')
    monkeypatch.setenv('FFTRACER_LOG_LEVEL', 'debug')
    monkeypatch.setenv('FFTRACER_CACHE_ENABLED', 'yes')
    settings = Settings()
    assert settings.get('compute.threads') == 1
    assert settings.get('application.log_level') == 'DEBUG'
    assert settings.get('cache.enabled') is True

    monkeypatch.setenv('FFTRACER_THREADS', 'many')
    assert Settings().get('compute.threads') == 1


def test_settings_file_is_merged(tmp_path):
    path = tmp_path / 'settings.json'
    path.write_text(json.dumps({'quadrature': {'rule': 'trapezoid'}, 'grid': {'points': 100}}))
    settings = Settings(str(path))
    assert settings.get('quadrature.rule') == 'trapezoid'
    assert settings.get('quadrature.coverage_tolerance') == 1e-3
    assert settings.get('grid.points') == 100
    assert any('500' in w for w in settings.validate_config()['warnings'])


def test_broken_settings_file_falls_back_to_defaults(tmp_path):
    path = tmp_path / 'settings.json'
    path.write_text('{not json')
    assert Settings(str(path)).get('quadrature.rule') == 'simpson'


def test_validation_errors():
    settings = Settings()
    settings.set('compute.threads', 0)
    settings.set('quadrature.rule', 'romberg')
    settings.set('grid.omega_tau_min', 1e5)
    settings.set('application.log_level', 'LOUD')
    errors = settings.validate_config()['errors']
    assert len(errors) == 4


def test_save_and_reload(tmp_path):
    settings = Settings()
    settings.set('montecarlo.n_trajectories', 250)
    target = tmp_path / 'nested' / 'settings.json'
    settings.save(str(target))
    saved = json.loads(target.read_text())
    assert 'last_updated' in saved
    assert Settings(str(target)).get('montecarlo.n_trajectories') == 250
