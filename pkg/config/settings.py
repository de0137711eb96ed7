#!/usr/bin/env python3
"""
Configuration Settings for FFTracer
Application defaults, settings file and environment overrides
"""

import copy
import json
import logging
import os
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv

ENV_PREFIX = 'FFTRACER_'
LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')


class Settings:
    """Configuration manager for FFTracer runs"""

    default_config = {
        'application': {
            'app_name': 'FFTracer',
            'version': '1.0.0',
            'log_level': 'INFO',
            'output_dir': 'results',
        },
        'compute': {
            'threads': 1,
        },
        'grid': {
            'spacing': 'hybrid',
            'omega_tau_min': 1e-4,
            'omega_tau_max': 1e4,
            'points': 2000,
            'omega_tau_step': 0.1,
        },
        'quadrature': {
            'rule': 'simpson',
            'end_corrections': True,
            'coverage_tolerance': 1e-3,
        },
        'montecarlo': {
            'n_trajectories': 1000,
            'steps_per_segment': 1000,
            'window_factor': 1,
            'progress': False,
        },
        'cache': {
            'enabled': False,
            'path': 'cache/control_matrices.sqlite',
        },
    }

    def __init__(self, settings_file: Optional[str] = None, env_file: Optional[str] = None):
        """Load defaults, then the settings file, then the environment"""
        self.logger = logging.getLogger(__name__)
        load_dotenv(env_file)
        self.settings_file = settings_file or os.getenv(f'{ENV_PREFIX}SETTINGS')
        self._load_config()

    def _load_config(self):
        """Load configuration from JSON file and environment variables"""
        self.config = copy.deepcopy(self.default_config)
        try:
            if self.settings_file and Path(self.settings_file).exists():
                with open(self.settings_file, 'r') as f:
                    self._merge_config(self.config, json.load(f))
                self.logger.info(f"Settings loaded from {self.settings_file}")
            elif self.settings_file:
                self.logger.warning(f"Settings file {self.settings_file} not found, using defaults")
        except (OSError, json.JSONDecodeError) as e:
            self.logger.error(f"Error loading settings: {e}")
            self.logger.info("Using default settings")
            self.config = copy.deepcopy(self.default_config)

        self._load_from_environment()

    def _merge_config(self, base_config: Dict, new_config: Dict):
        """Recursively merge configuration dictionaries"""
        for key, value in new_config.items():
            if key in base_config and isinstance(base_config[key], dict) and isinstance(value, dict):
                self._merge_config(base_config[key], value)
            else:
                base_config[key] = value

    def _load_from_environment(self):
        """Apply FFTRACER_* environment overrides"""
        overrides = {
            'THREADS': ('compute.threads', int),
            'LOG_LEVEL': ('application.log_level', str.upper),
            'OUTPUT_DIR': ('application.output_dir', str),
            'CACHE_PATH': ('cache.path', str),
            'CACHE_ENABLED': ('cache.enabled', lambda v: v.strip().lower() in ('1', 'true', 'yes')),
        }
        for suffix, (key, convert) in overrides.items():
            raw = os.getenv(f'{ENV_PREFIX}{suffix}')
            if raw is None or raw == '':
                continue
            try:
                self._assign(key, convert(raw))
            except ValueError as e:
                self.logger.error(f"Ignoring {ENV_PREFIX}{suffix}={raw!r}: {e}")

    def _assign(self, key: str, value: Any):
        keys = key.split('.')
        config_ref = self.config
        for key_part in keys[:-1]:
            config_ref = config_ref.setdefault(key_part, {})
        config_ref[keys[-1]] = value

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value by dotted key"""
        value = self.config
        for key_part in key.split('.'):
            if isinstance(value, dict) and key_part in value:
                value = value[key_part]
            else:
                return default
        return value

    def set(self, key: str, value: Any):
        """Set configuration value by dotted key (in memory; see save)"""
        self._assign(key, value)

    def save(self, path: Optional[str] = None):
        """Write current settings to JSON"""
        target = Path(path or self.settings_file or 'fftracer_settings.json')
        config_to_save = copy.deepcopy(self.config)
        config_to_save['last_updated'] = datetime.now().isoformat()
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            with open(target, 'w') as f:
                json.dump(config_to_save, f, indent=2)
            self.logger.info(f"Settings saved to {target}")
        except OSError as e:
            self.logger.error(f"Error saving settings: {e}")
            raise

    def validate_config(self) -> Dict[str, list]:
        """Validate configuration and return any issues"""
        issues = {
            'errors': [],
            'warnings': []
        }

        if str(self.get('application.log_level')).upper() not in LOG_LEVELS:
            issues['errors'].append(f"Log level must be one of {LOG_LEVELS}")

        threads = self.get('compute.threads')
        if not isinstance(threads, int) or threads < 1:
            issues['errors'].append("compute.threads must be a positive integer")
        elif threads > (os.cpu_count() or 1):
            issues['warnings'].append(f"compute.threads={threads} exceeds the {os.cpu_count()} available CPUs")

        if self.get('quadrature.rule') not in ('trapezoid', 'simpson'):
            issues['errors'].append("quadrature.rule must be 'trapezoid' or 'simpson'")

        grid = self.get('grid', {})
        if grid.get('spacing') not in ('log', 'linear', 'hybrid'):
            issues['errors'].append("grid.spacing must be 'log', 'linear' or 'hybrid'")
        if grid.get('spacing') == 'hybrid' and not grid.get('omega_tau_step', 0) > 0:
            issues['errors'].append("grid.omega_tau_step must be positive")
        if not 0 < grid.get('omega_tau_min', 0) < grid.get('omega_tau_max', 0):
            issues['errors'].append("grid needs 0 < omega_tau_min < omega_tau_max")
        if int(grid.get('points', 0)) < 2:
            issues['errors'].append("grid.points must be at least 2")
        elif int(grid.get('points', 0)) < 500:
            issues['warnings'].append("Fewer than 500 grid points; decay amplitudes may be inaccurate")

        if int(self.get('montecarlo.n_trajectories', 0)) < 1:
            issues['errors'].append("montecarlo.n_trajectories must be positive")

        return issues

    def configure_logging(self):
        """Configure root logging from application.log_level"""
        level = str(self.get('application.log_level', 'INFO')).upper()
        logging.basicConfig(level=getattr(logging, level, logging.INFO),
                            format='%(asctime)s %(levelname)s %(name)s: %(message)s')

    def __str__(self) -> str:
        return (f"FFTracer Settings - threads: {self.get('compute.threads')}, "
                f"quadrature: {self.get('quadrature.rule')}, cache: {self.get('cache.enabled')}")
