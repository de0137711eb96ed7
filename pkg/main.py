#!/usr/bin/env python3
"""
FFTracer - filter functions and correlation filter functions of pulse sequences

    python main.py run config.json [--output-dir DIR] [--threads N] [--seed S]
    python main.py validate config.json

Exit status: 0 on success, 1 for computation errors, 2 for configuration errors and
unexpected failures (I/O, linear algebra); every failure leaves an error.json.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from config.run_config import RunConfig, Task, load_run_config, validate_run_config
from config.settings import Settings
from database.cache_manager import ControlMatrixCache
from models.basis import build_pauli_basis
from models.control_matrix import GateCache, control_matrix_freq, sequence_control_matrix
from models.exceptions import ConfigError, FFTracerError, NonIntegrableSpectrumError
from models.filter_functions import correlation_ff, fidelity_ff
from models.montecarlo import periodogram, simulate_process, synthesize_trajectory, trajectory_rng
from models.process import correlation_infidelities, decay_amplitudes_freq, fidelity, process_map
from models.pulse import PulseSequence
from models.spectra import xi_estimate
from utils.result_writer import ResultWriter, write_error_report

logger = logging.getLogger('fftracer')

EXIT_OK = 0
EXIT_COMPUTATION = 1
EXIT_CONFIG = 2

PERIODOGRAM_TRAJECTORIES = 200


class Runner:
    """Executes the tasks of one run config

    Results are computed lazily and shared between tasks that use the same
    set of noise channels.
    """

    def __init__(self, config: RunConfig, settings: Settings, writer: ResultWriter,
                 threads: int = 1):
        self.logger = logging.getLogger(__name__)
        self.config = config
        self.settings = settings
        self.writer = writer
        self.threads = threads
        self.sequence = config.sequence
        self.basis = build_pauli_basis(int(round(np.log2(self.sequence.dimension))))
        self.coverage_tolerance = settings.get('quadrature.coverage_tolerance', 1e-3)
        self.warnings: List[str] = []
        self.diagnostics: Dict = {}
        self._results: Dict[Tuple[str, ...], Dict] = {}
        self.cache = GateCache(self._cache_backend())

    def _cache_backend(self) -> Optional[ControlMatrixCache]:
        if not self.settings.get('cache.enabled', False):
            return None
        try:
            return ControlMatrixCache(self.settings.get('cache.path'))
        except Exception as e:
            self.logger.warning(f"Persistent cache disabled: {e}")
            return None

    def _warn(self, message: str):
        self.logger.warning(message)
        self.warnings.append(message)

    def _sequence(self, channels: Tuple[str, ...]) -> PulseSequence:
        if not channels:
            return self.sequence
        return self.sequence.restricted(channels)

    def _cached(self, channels: Tuple[str, ...], name: str, compute):
        store = self._results.setdefault(channels, {})
        if name not in store:
            store[name] = compute(self._sequence(channels))
        return store[name]

    def control_matrix(self, channels: Tuple[str, ...]):
        return self._cached(channels, 'control_matrix',
                            lambda seq: control_matrix_freq(seq, self.basis, self.config.grid))

    def correlation_ff(self, channels: Tuple[str, ...]):
        def compute(seq):
            cm = sequence_control_matrix(seq, self.basis, self.config.grid, self.cache)
            return correlation_ff(cm.parts, self.basis)
        return self._cached(channels, 'correlation_ff', compute)

    def decay_amplitudes(self, channels: Tuple[str, ...]):
        def compute(seq):
            gammas = decay_amplitudes_freq(self.control_matrix(channels), seq.spectra, self.config.rule,
                                           self.config.end_corrections, self.coverage_tolerance)
            self.diagnostics.setdefault('tail_share', {}).update(gammas.tail_share)
            for name, share in gammas.tail_share.items():
                if share > self.coverage_tolerance:
                    self.warnings.append(f"Channel {name}: {share:.2e} of the decay amplitude lies above the grid")
            return gammas
        return self._cached(channels, 'decay_amplitudes', compute)

    def noise_strength(self) -> Optional[Dict]:
        try:
            xi = xi_estimate(self.sequence, bandwidth=self.config.grid.omega_max)
        except NonIntegrableSpectrumError as e:
            self._warn(f"Noise strength not available: {e}")
            return None
        if xi.total > 0.1:
            self.warnings.append(f"Noise strength xi = {xi.total:.3g} is not small")
        if xi.heuristic:
            self._warn("Noise strength is a heuristic estimate (noise operators vary between segments)")
        return xi.to_dict()

    def run_task(self, task: Task):
        channels = task.channels
        diagnostics = self.diagnostics.setdefault(task.name + self.writer.suffix, {})
        if task.name == 'fidelity_ff':
            self.writer.write_fidelity_ff(fidelity_ff(self.control_matrix(channels)))
        elif task.name == 'generalized_ff':
            self.writer.write_generalized_ff(self.control_matrix(channels))
        elif task.name == 'correlation_ff':
            self.writer.write_correlation_ff(self.correlation_ff(channels))
        elif task.name == 'process':
            gammas = self.decay_amplitudes(channels)
            process = process_map(gammas, self.basis)
            eigenvalues = process.choi_eigenvalues()
            diagnostics['choi_min_eigenvalue'] = float(eigenvalues[0])
            diagnostics['trace_preservation_defect'] = process.trace_preservation_defect()
            diagnostics['psd_defect'] = gammas.psd_defect()
            if eigenvalues[0] < -1e-3 * eigenvalues[-1]:
                self._warn(f"Process map has a Choi eigenvalue {eigenvalues[0]:.3g}")
            self.writer.write_process(process, gammas)
        elif task.name == 'fidelity':
            result = fidelity(self.decay_amplitudes(channels), self.sequence.dimension)
            diagnostics.update(result.to_dict())
            self.writer.write_fidelity(result)
        elif task.name == 'correlation_infidelities':
            matrix = correlation_infidelities(self.correlation_ff(channels), self._sequence(channels).spectra,
                                              self.config.rule, self.config.end_corrections)
            diagnostics['total'] = matrix.total()
            self.writer.write_correlation_infidelities(matrix)
        elif task.name == 'montecarlo_check':
            diagnostics.update(self.montecarlo_check(channels))

    def montecarlo_check(self, channels: Tuple[str, ...]) -> Dict:
        trajectories = self.config.montecarlo
        if trajectories.workers == 1 and self.threads > 1:
            trajectories = replace(trajectories, workers=self.threads)
        sequence = self._sequence(channels)
        perturbative = process_map(self.decay_amplitudes(channels), self.basis)
        result = simulate_process(sequence, trajectories)
        summary = result.to_dict()
        summary['perturbative_infidelity'] = 1.0 - perturbative.average_gate_fidelity()
        deviation = abs(summary['perturbative_infidelity'] - result.infidelity)
        if result.infidelity_error > 0 and deviation > 3 * result.infidelity_error:
            self._warn(f"Monte Carlo infidelity differs from the perturbative one by "
                       f"{deviation / result.infidelity_error:.1f} standard errors")
        self.writer.write_montecarlo(perturbative.matrix, result, self.basis.labels)
        if self.config.dump_periodograms:
            self.writer.write_periodograms(self._periodograms(sequence, result.dt))
        return summary

    def _periodograms(self, sequence: PulseSequence, dt: float) -> Dict[str, tuple]:
        n_samples = int(round(sequence.total_duration() / dt)) * self.config.montecarlo.window_factor
        estimates = {}
        for name, spectrum in sequence.spectra.items():
            powers = []
            for index in range(PERIODOGRAM_TRAJECTORIES):
                samples = synthesize_trajectory(spectrum, n_samples, dt, trajectory_rng(self.config.seed, index))
                omega, power = periodogram(samples, dt)
                powers.append(power)
            estimates[name] = (omega, np.mean(powers, axis=0))
        return estimates

    def run(self) -> int:
        xi = self.noise_strength()
        for task in self.config.tasks:
            self.writer.suffix = '_' + '-'.join(task.channels) if task.channels else ''
            self.logger.info(f"Running task {task.name}{self.writer.suffix}")
            self.run_task(task)
        self.writer.suffix = ''
        if self.cache.hits or self.cache.misses:
            self.diagnostics['gate_cache'] = {'hits': self.cache.hits, 'misses': self.cache.misses}
        self.writer.write_manifest(self.config.raw, self.config.grid, xi, self.diagnostics,
                                   self.warnings, self.config.seed)
        return EXIT_OK


def command_run(args, settings: Settings) -> int:
    output_dir = args.output_dir or settings.get('application.output_dir', 'results')
    try:
        config = load_run_config(args.config, settings.config, seed=args.seed, output_dir=args.output_dir)
        output_dir = config.output_dir or output_dir
        threads = args.threads or settings.get('compute.threads', 1)
        writer = ResultWriter(output_dir)
        return Runner(config, settings, writer, threads).run()
    except ConfigError as e:
        logger.error(str(e))
        for violation in e.violations:
            logger.error(f"  {violation['path'] or '<root>'}: {violation['message']}")
        write_error_report(output_dir, e)
        return EXIT_CONFIG
    except FFTracerError as e:
        logger.error(f"Computation failed: {e}")
        write_error_report(output_dir, e)
        return EXIT_COMPUTATION
    except Exception as e:
        logger.exception(f"Run failed: {type(e).__name__}: {e}")
        write_error_report(output_dir, e)
        return EXIT_CONFIG


def command_validate(args, settings: Settings) -> int:
    try:
        violations = validate_run_config(args.config, settings.config)
    except ConfigError as e:
        violations = e.violations
    print(json.dumps({'config': args.config, 'valid': not violations, 'violations': violations}, indent=2))
    return EXIT_OK if not violations else EXIT_CONFIG


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='fftracer', description=__doc__.strip().splitlines()[0])
    parser.add_argument('--settings', help='settings JSON file (default: $FFTRACER_SETTINGS)')
    subparsers = parser.add_subparsers(dest='command', required=True)

    run = subparsers.add_parser('run', help='run the tasks of a config')
    run.add_argument('config')
    run.add_argument('--output-dir', help='output directory (overrides config and settings)')
    run.add_argument('--threads', type=int, help='worker processes (default: $FFTRACER_THREADS or 1)')
    run.add_argument('--seed', type=int, help='random seed (overrides config)')

    validate = subparsers.add_parser('validate', help='check a config without computing')
    validate.add_argument('config')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = Settings(args.settings)
    settings.configure_logging()
    issues = settings.validate_config()
    for warning in issues['warnings']:
        logger.warning(warning)
    if issues['errors']:
        for error in issues['errors']:
            logger.error(error)
        return EXIT_CONFIG

    if args.command == 'run':
        return command_run(args, settings)
    return command_validate(args, settings)


def cli():
    sys.exit(main())


if __name__ == '__main__':
    cli()
