#!/usr/bin/env python3
"""
Quick Start Script for FFTracer
Writes the example run configs into configs/ and runs them into results/
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

import main as fftracer
from models.circuits import circuit_config, qft_configs
from models.spectra import PowerLawSpectrum, WhiteSpectrum


def example_configs() -> dict:
    """name -> run config"""
    white = WhiteSpectrum(1e-3)
    one_over_f = PowerLawSpectrum(amplitude=1e-3, exponent=1.0, omega_min=1e-2, omega_max=1e3)
    configs = {
        'fid': circuit_config('fid', {'tau': 1.0}, {'z': white}, ('fidelity_ff', 'fidelity'),
                              {'spacing': 'log', 'omega_min': 1e-3, 'omega_max': 1e2, 'points': 2000}),
        'spin_echo': circuit_config('spin_echo', {'tau_idle': 1.0}, {'z': one_over_f},
                                    ('fidelity_ff', 'correlation_ff', 'correlation_infidelities', 'process'),
                                    {'spacing': 'log', 'omega_min': 1e-3, 'omega_max': 1e3, 'points': 4000}),
        'spin_echo_finite': circuit_config('spin_echo', {'tau_idle': 1.0, 'mode': 'finite',
                                                         'pulse_duration': 0.1},
                                           {'z': one_over_f}, ('fidelity', 'correlation_infidelities')),
        'rabi_montecarlo': {
            'schema_version': 1,
            'sequence': {
                'dimension': 2,
                'items': [
                    {'type': 'segment', 'duration': 1.0, 'hamiltonian': {'pauli': {'X': np.pi / 2}},
                     'noise_operators': {'z': {'pauli': {'Z': 1.0}}}, 'label': 'x_pi'},
                    {'type': 'segment', 'duration': 1.0, 'hamiltonian': {'pauli': {'Y': np.pi / 4}},
                     'noise_operators': {'z': {'pauli': {'Z': 1.0}}}, 'label': 'y_pi2'},
                ],
                'gate_boundaries': [0, 1, 2],
                'gate_labels': ['x_pi', 'y_pi2'],
            },
            'channels': [{'name': 'z', 'spectrum': {'type': 'white', 's0': 1e-3}}],
            'grid': {'spacing': 'log', 'omega_min': 1e-4, 'omega_max': 1e5, 'points': 20000},
            'quadrature': {'rule': 'simpson', 'end_corrections': True},
            'tasks': ['process', 'fidelity', 'montecarlo_check'],
            'montecarlo': {'n_trajectories': 500, 'steps_per_segment': 200, 'dump_periodograms': True},
            'seed': 1,
        },
    }
    no_echo, echo = qft_configs()
    configs['qft'] = no_echo
    configs['qft_echo'] = echo
    return configs


def main() -> bool:
    parser = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    parser.add_argument('--configs', default='configs', help='directory for the config files')
    parser.add_argument('--results', default='results', help='directory for the outputs')
    parser.add_argument('--write-only', action='store_true', help='write configs without running them')
    parser.add_argument('--skip', nargs='*', default=[], help='config names not to run')
    args = parser.parse_args()

    print("=" * 60)
    print("FFTracer - Quick Start")
    print("=" * 60)

    config_dir = Path(args.configs)
    config_dir.mkdir(parents=True, exist_ok=True)
    print(f"\nStep 1: Writing example configs to {config_dir}/")
    paths = {}
    for name, config in example_configs().items():
        path = config_dir / f"{name}.json"
        with open(path, 'w') as f:
            json.dump(config, f, indent=2)
        paths[name] = path
        print(f"   {path}")

    if args.write_only:
        return True

    print(f"\nStep 2: Running configs into {args.results}/")
    failed = []
    for name, path in paths.items():
        if name in args.skip:
            print(f"   skipped {name}")
            continue
        status = fftracer.main(['run', str(path), '--output-dir', str(Path(args.results) / name)])
        print(f"   {name}: {'ok' if status == 0 else f'failed (exit {status})'}")
        if status != 0:
            failed.append(name)

    print("\n" + "=" * 60)
    if failed:
        print(f"Finished with failures: {failed}")
    else:
        print("All examples finished; see manifest.json in each result directory")
    print("=" * 60)
    return not failed


if __name__ == '__main__':
    sys.exit(0 if main() else 1)
