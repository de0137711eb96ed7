#!/usr/bin/env python3
"""
Result Writer for FFTracer
One CSV per task, a JSON manifest per run and an error report on failure.
Numbers are written with 17 significant digits so they re-read exactly.
Column layouts are documented in docs/config_schema.md.
"""

import hashlib
import io
import json
import logging
import platform
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import scipy

from models.control_matrix import ControlMatrix
from models.exceptions import CapacityError, ConfigError, FFTracerError, ValidationError
from models.filter_functions import CorrelationFF, FidelityFF
from models.process import CorrelationInfidelityMatrix, DecayAmplitudes, FidelityResult, ProcessMap
from models.spectra import FrequencyGrid

FLOAT_FORMAT = '%.17g'
NPZ_FORMAT_VERSION = 1
# rows of the long-format generalized filter function table
GENERALIZED_FF_MAX_ROWS = 20_000_000

try:
    from importlib.metadata import version as _package_version
    APP_VERSION = _package_version('fftracer')
except Exception:
    APP_VERSION = '1.0.0'


def config_hash(document: Dict) -> str:
    """sha256 of the canonical JSON form of a run config"""
    canonical = json.dumps(document, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode()).hexdigest()


def versions() -> Dict[str, str]:
    return {'fftracer': APP_VERSION, 'python': platform.python_version(), 'numpy': np.__version__,
            'scipy': scipy.__version__, 'pandas': pd.__version__}


def save_control_matrix(cm: ControlMatrix, target: Union[str, Path, io.BytesIO]):
    """npz with values, grid and ideal propagator plus a JSON header"""
    header = {
        'format_version': NPZ_FORMAT_VERSION,
        'basis_labels': list(cm.basis_labels),
        'channels': list(cm.channels),
        'grid_spacing': cm.grid.spacing,
        'duration': cm.duration,
        'label': cm.label,
    }
    np.savez(target, values=cm.values, omega=cm.grid.values, total_propagator=cm.total_propagator,
             header=np.array(json.dumps(header)))


def load_control_matrix(source: Union[str, Path, io.BytesIO]) -> ControlMatrix:
    with np.load(source, allow_pickle=False) as data:
        header = json.loads(str(data['header']))
        if header.get('format_version') != NPZ_FORMAT_VERSION:
            raise ValidationError(f"Unsupported control-matrix dump version {header.get('format_version')}")
        values = data['values']
        grid = FrequencyGrid(data['omega'], header['grid_spacing'])
        propagator = data['total_propagator']
    if values.shape != (len(header['channels']), len(header['basis_labels']), len(grid)):
        raise ValidationError(f"Control-matrix dump shape {values.shape} does not match its header")
    return ControlMatrix(values, grid, float(header['duration']), tuple(header['channels']),
                         tuple(header['basis_labels']), propagator, label=header.get('label', ''))


def write_error_report(output_dir: Union[str, Path], error: BaseException) -> Path:
    """error.json with the exception type, message and any schema violations"""
    report = {
        'status': 'error',
        'type': type(error).__name__,
        'message': str(error),
        'violations': list(getattr(error, 'violations', []) or []),
        'timestamp': datetime.now().isoformat(),
    }
    if isinstance(error, FFTracerError) and not isinstance(error, ConfigError):
        channels = getattr(error, 'channels', None)
        if channels:
            report['channels'] = list(channels)
    path = Path(output_dir) / 'error.json'
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(report, f, indent=2)
    return path


class ResultWriter:
    """Writes the outputs of one run into a directory"""

    def __init__(self, output_dir: Union[str, Path]):
        self.logger = logging.getLogger(__name__)
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.files: Dict[str, List[str]] = {}
        # appended to file stems, e.g. "_z" for a task restricted to channel z
        self.suffix = ''

    def _write_frame(self, task: str, name: str, frame: pd.DataFrame, index: bool = False) -> Path:
        stem, extension = name.rsplit('.', 1)
        name = f"{stem}{self.suffix}.{extension}"
        path = self.output_dir / name
        frame.to_csv(path, index=index, float_format=FLOAT_FORMAT)
        self.files.setdefault(task, []).append(name)
        self.logger.info(f"Wrote {path}")
        return path

    def write_fidelity_ff(self, ff: FidelityFF) -> Path:
        """omega, F_<channel>..., F_total"""
        columns = {'omega': ff.omega}
        for name, values in zip(ff.channels, ff.values):
            columns[f"F_{name}"] = values
        columns['F_total'] = ff.total()
        return self._write_frame('fidelity_ff', 'fidelity_ff.csv', pd.DataFrame(columns))

    def write_generalized_ff(self, cm: ControlMatrix) -> Path:
        """Long format over the upper triangle: channel, k, l, omega, re, im"""
        n_basis, n_omega = cm.values.shape[1], cm.values.shape[2]
        k_idx, l_idx = np.triu_indices(n_basis)
        n_rows = len(cm.channels) * len(k_idx) * n_omega
        if n_rows > GENERALIZED_FF_MAX_ROWS:
            raise CapacityError(
                f"Generalized filter function table would have {n_rows} rows "
                f"(limit {GENERALIZED_FF_MAX_ROWS}); use a coarser grid or the fidelity_ff task"
            )
        labels = np.array(cm.basis_labels)
        frames = []
        for a, name in enumerate(cm.channels):
            block = cm.values[a, k_idx].conj() * cm.values[a, l_idx]
            frames.append(pd.DataFrame({
                'channel': name,
                'k': np.repeat(labels[k_idx], n_omega),
                'l': np.repeat(labels[l_idx], n_omega),
                'omega': np.tile(cm.omega, len(k_idx)),
                're': block.real.ravel(),
                'im': block.imag.ravel(),
            }))
        return self._write_frame('generalized_ff', 'generalized_ff.csv', pd.concat(frames, ignore_index=True))

    def write_correlation_ff(self, cff: CorrelationFF) -> Path:
        """omega, then '<channel>[<gate>,<gate>].re' / '.im' per gate pair"""
        columns = {'omega': cff.omega}
        for a, name in enumerate(cff.channels):
            for g, row in enumerate(cff.gate_labels):
                for h, col in enumerate(cff.gate_labels):
                    columns[f"{name}[{row},{col}].re"] = cff.values[a, g, h].real
                    columns[f"{name}[{row},{col}].im"] = cff.values[a, g, h].imag
        return self._write_frame('correlation_ff', 'correlation_ff.csv', pd.DataFrame(columns))

    def write_decay_amplitudes(self, gammas: DecayAmplitudes, task: str = 'process') -> Path:
        """channel, k, l, gamma (full matrix, row-major)"""
        n_basis = len(gammas.basis_labels)
        labels = np.array(gammas.basis_labels)
        frames = [pd.DataFrame({'channel': name,
                                'k': np.repeat(labels, n_basis),
                                'l': np.tile(labels, n_basis),
                                'gamma': gamma.ravel()})
                  for name, gamma in zip(gammas.channels, gammas.values)]
        return self._write_frame(task, 'decay_amplitudes.csv', pd.concat(frames, ignore_index=True))

    def write_process(self, process: ProcessMap, gammas: DecayAmplitudes) -> List[Path]:
        """Transfer matrix labelled by basis elements, plus the decay amplitudes"""
        labels = list(process.basis.labels)
        frame = pd.DataFrame(process.matrix, index=pd.Index(labels, name='row'), columns=labels)
        return [self._write_frame('process', 'process.csv', frame, index=True),
                self.write_decay_amplitudes(gammas, 'process')]

    def write_fidelity(self, result: FidelityResult) -> Path:
        rows = [{'channel': name, 'infidelity': value} for name, value in result.per_channel.items()]
        rows.append({'channel': 'total', 'infidelity': result.infidelity})
        frame = pd.DataFrame(rows)
        frame['fidelity'] = 1.0 - frame['infidelity']
        return self._write_frame('fidelity', 'fidelity.csv', frame)

    def write_correlation_infidelities(self, matrix: CorrelationInfidelityMatrix) -> List[Path]:
        """G x G matrix with gate labels on both axes and a row_sum column; per channel if several"""
        def labelled(values: np.ndarray) -> pd.DataFrame:
            frame = pd.DataFrame(values, index=pd.Index(matrix.gate_labels, name='gate'),
                                 columns=list(matrix.gate_labels))
            frame['row_sum'] = values.sum(axis=1)
            return frame

        paths = [self._write_frame('correlation_infidelities', 'correlation_infidelities.csv',
                                   labelled(matrix.values), index=True)]
        if len(matrix.channels) > 1:
            for name in matrix.channels:
                paths.append(self._write_frame('correlation_infidelities',
                                               f"correlation_infidelities_{name}.csv",
                                               labelled(matrix.channel(name)), index=True))
        return paths

    def write_montecarlo(self, perturbative: np.ndarray, result, basis_labels: Sequence[str]) -> Path:
        """Entrywise comparison of the perturbative and sampled transfer matrices"""
        n_basis = len(basis_labels)
        labels = np.array(basis_labels)
        error = result.standard_error.ravel()
        difference = result.transfer_matrix.ravel() - perturbative.ravel()
        with np.errstate(divide='ignore', invalid='ignore'):
            in_se = np.where(error > 0, difference / error, np.nan)
        frame = pd.DataFrame({
            'row': np.repeat(labels, n_basis),
            'col': np.tile(labels, n_basis),
            'perturbative': perturbative.ravel(),
            'montecarlo': result.transfer_matrix.ravel(),
            'standard_error': error,
            'deviation_in_se': in_se,
        })
        return self._write_frame('montecarlo_check', 'montecarlo_check.csv', frame)

    def write_periodograms(self, periodograms: Dict[str, tuple]) -> List[Path]:
        """Two-column text (omega, S estimate) per channel"""
        paths = []
        for name, (omega, power) in periodograms.items():
            filename = f"periodogram_{name}{self.suffix}.txt"
            path = self.output_dir / filename
            np.savetxt(path, np.column_stack([omega, power]), fmt=FLOAT_FORMAT,
                       header='omega S(omega), two-sided, averaged over trajectories')
            self.files.setdefault('montecarlo_check', []).append(filename)
            paths.append(path)
        return paths

    def write_manifest(self, document: Dict, grid: FrequencyGrid, xi: Optional[Dict],
                       diagnostics: Dict, warnings: List[str], seed: int) -> Path:
        manifest = {
            'status': 'ok',
            'config_hash': config_hash(document),
            'versions': versions(),
            'grid': grid.to_config(),
            'xi': xi,
            'seed': seed,
            'diagnostics': diagnostics,
            'warnings': list(warnings),
            'outputs': self.files,
            'timestamp': datetime.now().isoformat(),
        }
        path = self.output_dir / 'manifest.json'
        with open(path, 'w') as f:
            json.dump(manifest, f, indent=2, default=float)
        self.logger.info(f"Wrote manifest {path}")
        return path
