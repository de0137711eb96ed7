#!/usr/bin/env python3
"""
Run Configuration for FFTracer
Parses and validates run-config JSON documents. Validation collects every
violation with its field path (e.g. ``channels[0].spectrum.exponent``)
instead of stopping at the first one. The schema is described in
docs/config_schema.md.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.basis import MAX_QUBITS, PauliString
from models.circuits import BUILDERS, build_circuit
from models.exceptions import ConfigError, FFTracerError
from models.montecarlo import TrajectoryConfig
from models.process import DEFAULT_END_CORRECTIONS, DEFAULT_RULE, QUADRATURE_RULES
from models.pulse import InstantaneousGate, NoiseChannel, PulseSequence, Segment
from models.spectra import (DEFAULT_GRID_POINTS, DEFAULT_RESOLUTION, GRID_SPACINGS, FrequencyGrid,
                            PowerLawSpectrum, SpectralDensity, TabulatedSpectrum, WhiteSpectrum,
                            load_tabulated)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TASKS = ('fidelity_ff', 'generalized_ff', 'correlation_ff', 'process', 'fidelity',
         'correlation_infidelities', 'montecarlo_check')
TOP_LEVEL_KEYS = ('schema_version', 'sequence', 'channels', 'grid', 'quadrature', 'tasks',
                  'output_dir', 'seed', 'montecarlo')

GRID_DEFAULTS = {'spacing': 'hybrid', 'omega_tau_min': 1e-4, 'omega_tau_max': 1e4, 'points': DEFAULT_GRID_POINTS,
                 'omega_tau_step': DEFAULT_RESOLUTION}


@dataclass(frozen=True)
class Task:
    name: str
    channels: Tuple[str, ...] = ()


@dataclass(eq=False)
class RunConfig:
    sequence: PulseSequence
    grid: FrequencyGrid
    tasks: Tuple[Task, ...]
    rule: str = DEFAULT_RULE
    end_corrections: bool = DEFAULT_END_CORRECTIONS
    output_dir: Optional[str] = None
    seed: int = 0
    montecarlo: TrajectoryConfig = field(default_factory=TrajectoryConfig)
    dump_periodograms: bool = False
    raw: Dict = field(default_factory=dict)
    source: Optional[str] = None

    @property
    def task_names(self) -> List[str]:
        return [task.name for task in self.tasks]


class _Violations:
    """Collects (path, message) pairs"""

    def __init__(self):
        self.items: List[Dict[str, str]] = []

    def add(self, path: str, message: str):
        self.items.append({'path': path, 'message': message})

    def __bool__(self) -> bool:
        return bool(self.items)


def _number(value: Any, path: str, violations: _Violations, positive: bool = False,
            nonnegative: bool = False) -> Optional[float]:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not np.isfinite(value):
        violations.add(path, f"expected a finite number, got {value!r}")
        return None
    if positive and value <= 0:
        violations.add(path, f"must be positive, got {value}")
        return None
    if nonnegative and value < 0:
        violations.add(path, f"must be non-negative, got {value}")
        return None
    return float(value)


def _integer(value: Any, path: str, violations: _Violations, minimum: int = 0) -> Optional[int]:
    if isinstance(value, bool) or not isinstance(value, int):
        violations.add(path, f"expected an integer, got {value!r}")
        return None
    if value < minimum:
        violations.add(path, f"must be >= {minimum}, got {value}")
        return None
    return value


def _unknown_keys(section: Dict, allowed: Sequence[str], path: str, violations: _Violations):
    for key in section:
        if key not in allowed:
            violations.add(f"{path}.{key}" if path else key, f"unknown key; allowed: {list(allowed)}")


def _coefficient(value: Any, path: str, violations: _Violations) -> Optional[complex]:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        re = _number(value[0], f"{path}[0]", violations)
        im = _number(value[1], f"{path}[1]", violations)
        return None if re is None or im is None else complex(re, im)
    number = _number(value, path, violations)
    return None if number is None else complex(number)


def parse_matrix(spec: Any, dimension: int, path: str, violations: _Violations) -> Optional[np.ndarray]:
    """{"pauli": {"XZ": c, ...}} or {"real": [[...]], "imag": [[...]]}"""
    if not isinstance(spec, dict):
        violations.add(path, "expected an object with 'pauli' or 'real'/'imag'")
        return None
    if 'pauli' in spec:
        terms = spec['pauli']
        if not isinstance(terms, dict) or not terms:
            violations.add(f"{path}.pauli", "expected a non-empty mapping label -> coefficient")
            return None
        n_qubits = int(round(np.log2(dimension)))
        matrix = np.zeros((dimension, dimension), dtype=complex)
        for label, value in terms.items():
            term_path = f"{path}.pauli.{label}"
            if len(label) != n_qubits or any(s not in 'IXYZ' for s in label):
                violations.add(term_path, f"expected a Pauli label of {n_qubits} symbols from IXYZ")
                continue
            coefficient = _coefficient(value, term_path, violations)
            if coefficient is not None:
                matrix += coefficient * PauliString(label).matrix()
        return matrix

    if 'real' not in spec:
        violations.add(path, "expected 'pauli' or 'real'/'imag'")
        return None
    try:
        real = np.asarray(spec['real'], dtype=float)
        imag = np.asarray(spec.get('imag', np.zeros_like(real)), dtype=float)
    except (TypeError, ValueError):
        violations.add(path, "matrix entries must be numbers")
        return None
    if real.shape != (dimension, dimension) or imag.shape != real.shape:
        violations.add(path, f"expected {dimension}x{dimension} real and imag parts, got {real.shape} and {imag.shape}")
        return None
    matrix = np.empty(real.shape, dtype=complex)
    matrix.real, matrix.imag = real, imag
    return matrix


def parse_spectrum(spec: Any, path: str, violations: _Violations,
                   base_dir: Optional[Path] = None) -> Optional[SpectralDensity]:
    if not isinstance(spec, dict) or 'type' not in spec:
        violations.add(path, "expected an object with a 'type' of white, power_law or tabulated")
        return None
    kind = spec['type']
    count = len(violations.items)
    try:
        if kind == 'white':
            _unknown_keys(spec, ('type', 's0', 'bandwidth'), path, violations)
            s0 = _number(spec.get('s0'), f"{path}.s0", violations, nonnegative=True)
            bandwidth = spec.get('bandwidth')
            if bandwidth is not None:
                bandwidth = _number(bandwidth, f"{path}.bandwidth", violations, positive=True)
            return WhiteSpectrum(s0, bandwidth) if len(violations.items) == count else None

        if kind == 'power_law':
            _unknown_keys(spec, ('type', 'amplitude', 'exponent', 'omega_min', 'omega_max'), path, violations)
            amplitude = _number(spec.get('amplitude'), f"{path}.amplitude", violations, nonnegative=True)
            exponent = _number(spec.get('exponent'), f"{path}.exponent", violations, nonnegative=True)
            lo = _number(spec.get('omega_min'), f"{path}.omega_min", violations, positive=True)
            hi = _number(spec.get('omega_max'), f"{path}.omega_max", violations, positive=True)
            if lo is not None and hi is not None and lo >= hi:
                violations.add(f"{path}.omega_max", f"must exceed omega_min ({lo})")
            if len(violations.items) != count:
                return None
            return PowerLawSpectrum(amplitude, exponent, lo, hi)

        if kind == 'tabulated':
            _unknown_keys(spec, ('type', 'path', 'omega', 'values'), path, violations)
            if 'path' in spec:
                source = Path(spec['path'])
                if base_dir is not None and not source.is_absolute():
                    source = base_dir / source
                if not source.exists():
                    violations.add(f"{path}.path", f"file {source} not found")
                    return None
                return load_tabulated(source)
            return TabulatedSpectrum(np.asarray(spec.get('omega', []), dtype=float),
                                     np.asarray(spec.get('values', []), dtype=float))
    except (FFTracerError, ValueError, TypeError) as e:
        violations.add(path, str(e))
        return None

    violations.add(f"{path}.type", f"unknown spectrum type {kind!r}; allowed: ['white', 'power_law', 'tabulated']")
    return None


def _parse_items(spec: Dict, spectra: Dict[str, SpectralDensity], violations: _Violations) -> Optional[PulseSequence]:
    channel_names = list(spectra)
    dimension = _integer(spec.get('dimension'), 'sequence.dimension', violations, minimum=2)
    if dimension is None:
        return None
    if dimension & (dimension - 1) or dimension > 2**MAX_QUBITS:
        violations.add('sequence.dimension', f"must be a power of two up to {2**MAX_QUBITS}")
        return None

    raw_items = spec.get('items')
    if not isinstance(raw_items, list) or not raw_items:
        violations.add('sequence.items', "expected a non-empty list")
        return None

    items = []
    for i, raw in enumerate(raw_items):
        path = f"sequence.items[{i}]"
        if not isinstance(raw, dict):
            violations.add(path, "expected an object")
            continue
        kind = raw.get('type', 'segment')
        count = len(violations.items)
        if kind == 'segment':
            _unknown_keys(raw, ('type', 'duration', 'hamiltonian', 'noise_operators', 'label'), path, violations)
            duration = _number(raw.get('duration'), f"{path}.duration", violations, positive=True)
            hamiltonian = parse_matrix(raw.get('hamiltonian', {'pauli': {'I' * int(round(np.log2(dimension))): 0}}),
                                       dimension, f"{path}.hamiltonian", violations)
            operators = raw.get('noise_operators', {})
            if not isinstance(operators, dict):
                violations.add(f"{path}.noise_operators", "expected a mapping channel -> operator")
                operators = {}
            for name in operators:
                if name not in channel_names:
                    violations.add(f"{path}.noise_operators.{name}", f"undefined channel '{name}'")
            for name in channel_names:
                if name not in operators:
                    violations.add(f"{path}.noise_operators", f"missing operator for channel '{name}'")
            parsed = {name: parse_matrix(op, dimension, f"{path}.noise_operators.{name}", violations)
                      for name, op in operators.items() if name in channel_names}
            if len(violations.items) == count:
                try:
                    items.append(Segment(duration, hamiltonian, parsed, raw.get('label', '')))
                except FFTracerError as e:
                    violations.add(path, str(e))
        elif kind == 'gate':
            _unknown_keys(raw, ('type', 'unitary', 'label'), path, violations)
            unitary = parse_matrix(raw.get('unitary'), dimension, f"{path}.unitary", violations)
            if len(violations.items) == count:
                try:
                    items.append(InstantaneousGate(unitary, raw.get('label', '')))
                except FFTracerError as e:
                    violations.add(f"{path}.unitary", str(e))
        else:
            violations.add(f"{path}.type", f"unknown item type {kind!r}; allowed: ['segment', 'gate']")

    boundaries = _gate_boundaries(spec.get('gate_boundaries', []), len(raw_items), violations)
    labels = spec.get('gate_labels', [])
    if not isinstance(labels, list) or not all(isinstance(label, str) for label in labels):
        violations.add('sequence.gate_labels', "expected a list of strings")
    elif labels and boundaries is not None and len(labels) != max(len(boundaries) - 1, 1):
        violations.add('sequence.gate_labels', f"expected {max(len(boundaries) - 1, 1)} labels, got {len(labels)}")
    if not isinstance(spec.get('label', ''), str):
        violations.add('sequence.label', "expected a string")
    if violations:
        return None
    channels = tuple(NoiseChannel(name, spectra[name]) for name in channel_names)
    return PulseSequence(tuple(items), channels, tuple(boundaries), tuple(labels), spec.get('label', ''))


def _gate_boundaries(value: Any, n_items: int, violations: _Violations) -> Optional[List[int]]:
    """Item indices 0 = b_0 < ... < b_G = n_items; empty means a single gate"""
    if not isinstance(value, list):
        violations.add('sequence.gate_boundaries', "expected a list of item indices")
        return None
    boundaries = [_integer(b, f"sequence.gate_boundaries[{i}]", violations) for i, b in enumerate(value)]
    if None in boundaries:
        return None
    if not boundaries:
        return boundaries
    if boundaries[0] != 0 or boundaries[-1] != n_items or len(boundaries) < 2:
        violations.add('sequence.gate_boundaries', f"must run from 0 to {n_items}, got {boundaries}")
        return None
    if any(b >= c for b, c in zip(boundaries, boundaries[1:])):
        violations.add('sequence.gate_boundaries', f"must be strictly increasing, got {boundaries}")
        return None
    return boundaries


def parse_sequence(spec: Any, spectra: Dict[str, SpectralDensity],
                   violations: _Violations) -> Optional[PulseSequence]:
    """Builder form {"builder", "params"} or inline form {"dimension", "items", ...}"""
    if not isinstance(spec, dict):
        violations.add('sequence', "expected an object")
        return None

    if 'builder' in spec:
        _unknown_keys(spec, ('builder', 'params'), 'sequence', violations)
        builder = spec['builder']
        if not isinstance(builder, str) or builder not in BUILDERS:
            violations.add('sequence.builder', f"unknown builder {builder!r}; allowed: {sorted(BUILDERS)}")
            return None
        params = spec.get('params', {})
        if not isinstance(params, dict):
            violations.add('sequence.params', "expected an object")
            return None
        for name, problem in BUILDERS[builder].check(params).items():
            violations.add(f"sequence.params.{name}", problem)
        if violations:
            return None
        try:
            sequence = build_circuit(builder, params)
        except FFTracerError as e:
            field = getattr(e, 'field', None)
            violations.add(f"sequence.params.{field}" if field else 'sequence.params', str(e))
            return None
    else:
        _unknown_keys(spec, ('dimension', 'items', 'gate_boundaries', 'gate_labels', 'label'), 'sequence', violations)
        before = len(violations.items)
        try:
            sequence = _parse_items(spec, spectra, violations)
        except FFTracerError as e:
            violations.add('sequence', str(e))
            return None
        if sequence is None or len(violations.items) != before:
            return None

    missing = [name for name in sequence.channel_names if name not in spectra]
    for name in missing:
        violations.add('channels', f"no spectrum defined for channel '{name}' used by the sequence")
    unused = [name for name in spectra if name not in sequence.channel_names]
    for name in unused:
        violations.add('channels', f"channel '{name}' is not used by the sequence")
    if missing or unused:
        return None

    channels = tuple(NoiseChannel(name, spectra[name]) for name in sequence.channel_names)
    return PulseSequence(sequence.items, channels, sequence.gate_boundaries, sequence.gate_labels,
                         sequence.label)


def parse_grid(spec: Any, tau: Optional[float], violations: _Violations,
               defaults: Optional[Dict] = None) -> Optional[FrequencyGrid]:
    """Absolute (omega_min/omega_max) or relative to tau (omega_tau_min/omega_tau_max)

    ``hybrid`` grids continue the log points linearly with spacing ``step``, or
    ``omega_tau_step / tau`` if no absolute step is given.
    """
    if spec is not None and not isinstance(spec, dict):
        violations.add('grid', "expected an object")
        return None
    spec = dict(spec or {})
    _unknown_keys(spec, ('spacing', 'omega_min', 'omega_max', 'omega_tau_min', 'omega_tau_max', 'points',
                         'step', 'omega_tau_step'), 'grid', violations)
    merged = dict(defaults or GRID_DEFAULTS)
    if 'omega_min' in spec or 'omega_max' in spec:
        merged.pop('omega_tau_min', None)
        merged.pop('omega_tau_max', None)
    merged.update(spec)

    spacing = merged.get('spacing', 'hybrid')
    if spacing not in GRID_SPACINGS:
        violations.add('grid.spacing', f"must be one of {list(GRID_SPACINGS)}, got {spacing!r}")
        return None
    for key in ('step', 'omega_tau_step'):
        if key in spec and spacing != 'hybrid':
            violations.add(f"grid.{key}", "only used with 'hybrid' spacing")
    points = _integer(merged.get('points'), 'grid.points', violations, minimum=2)

    if 'omega_min' in merged or 'omega_max' in merged:
        lo = _number(merged.get('omega_min'), 'grid.omega_min', violations, positive=True)
        hi = _number(merged.get('omega_max'), 'grid.omega_max', violations, positive=True)
    else:
        lo = _number(merged.get('omega_tau_min'), 'grid.omega_tau_min', violations, positive=True)
        hi = _number(merged.get('omega_tau_max'), 'grid.omega_tau_max', violations, positive=True)
        if tau is None:
            return None
        if lo is not None and hi is not None:
            lo, hi = lo / tau, hi / tau

    step = None
    if spacing == 'hybrid':
        if 'step' in merged:
            step = _number(merged['step'], 'grid.step', violations, positive=True)
        else:
            relative = _number(merged.get('omega_tau_step', DEFAULT_RESOLUTION), 'grid.omega_tau_step',
                               violations, positive=True)
            if tau is None:
                return None
            step = None if relative is None else relative / tau
        if step is None:
            return None
    if None in (lo, hi, points):
        return None
    if lo >= hi:
        violations.add('grid.omega_max', "must exceed omega_min")
        return None
    if spacing == 'hybrid':
        return FrequencyGrid.hybrid(lo, hi, points, step)
    return FrequencyGrid.log(lo, hi, points) if spacing == 'log' else FrequencyGrid.linear(lo, hi, points)


def parse_tasks(spec: Any, channel_names: Sequence[str], violations: _Violations) -> Tuple[Task, ...]:
    if not isinstance(spec, list) or not spec:
        violations.add('tasks', f"expected a non-empty list of task names from {list(TASKS)}")
        return ()
    tasks = []
    for i, raw in enumerate(spec):
        path = f"tasks[{i}]"
        if isinstance(raw, dict):
            _unknown_keys(raw, ('name', 'channels'), path, violations)
            name, channels = raw.get('name'), raw.get('channels', [])
        else:
            name, channels = raw, []
        if name not in TASKS:
            violations.add(path, f"unknown task {name!r}; allowed: {list(TASKS)}")
            continue
        if not isinstance(channels, list):
            violations.add(f"{path}.channels", "expected a list of channel names")
            continue
        for j, channel in enumerate(channels):
            if channel not in channel_names:
                violations.add(f"{path}.channels[{j}]", f"undefined channel '{channel}'")
        tasks.append(Task(name, tuple(channels)))
    return tuple(tasks)


def parse_montecarlo(spec: Any, seed: int, violations: _Violations,
                     defaults: Optional[Dict] = None) -> Tuple[Optional[TrajectoryConfig], bool]:
    spec = spec if spec is not None else {}
    if not isinstance(spec, dict):
        violations.add('montecarlo', "expected an object")
        spec = {}
    merged = dict(defaults or {})
    merged.update(spec)
    _unknown_keys(spec, ('n_trajectories', 'dt', 'steps_per_segment', 'window_factor', 'workers',
                         'progress', 'dump_periodograms'), 'montecarlo', violations)
    kwargs = {'seed': seed}
    if 'n_trajectories' in merged:
        kwargs['n_trajectories'] = _integer(merged['n_trajectories'], 'montecarlo.n_trajectories', violations, 1)
    if merged.get('dt') is not None:
        kwargs['dt'] = _number(merged['dt'], 'montecarlo.dt', violations, positive=True)
    if merged.get('steps_per_segment') is not None and 'dt' not in kwargs:
        kwargs['steps_per_segment'] = _integer(merged['steps_per_segment'], 'montecarlo.steps_per_segment',
                                               violations, 1)
    if 'window_factor' in merged:
        kwargs['window_factor'] = _integer(merged['window_factor'], 'montecarlo.window_factor', violations, 1)
    if 'workers' in merged:
        kwargs['workers'] = _integer(merged['workers'], 'montecarlo.workers', violations, 1)
    kwargs['progress'] = bool(merged.get('progress', False))
    if any(value is None for value in kwargs.values()):
        return None, False
    return TrajectoryConfig(**kwargs), bool(merged.get('dump_periodograms', False))


def parse_run_config(document: Any, base_dir: Optional[Path] = None,
                     defaults: Optional[Dict] = None) -> Tuple[Optional[RunConfig], List[Dict[str, str]]]:
    """Parse a run-config document; returns (config or None, violations)"""
    violations = _Violations()
    defaults = defaults or {}
    if not isinstance(document, dict):
        violations.add('', "run config must be a JSON object")
        return None, violations.items

    _unknown_keys(document, TOP_LEVEL_KEYS, '', violations)
    version = document.get('schema_version')
    if version != SCHEMA_VERSION:
        violations.add('schema_version', f"expected {SCHEMA_VERSION}, got {version!r}")

    spectra: Dict[str, SpectralDensity] = {}
    channels = document.get('channels', [])
    if not isinstance(channels, list):
        violations.add('channels', "expected a list")
        channels = []
    for i, raw in enumerate(channels):
        path = f"channels[{i}]"
        if not isinstance(raw, dict) or not isinstance(raw.get('name'), str) or not raw.get('name'):
            violations.add(f"{path}.name", "expected a non-empty channel name")
            continue
        _unknown_keys(raw, ('name', 'spectrum'), path, violations)
        if raw['name'] in spectra:
            violations.add(f"{path}.name", f"duplicate channel '{raw['name']}'")
            continue
        spectrum = parse_spectrum(raw.get('spectrum'), f"{path}.spectrum", violations, base_dir)
        if spectrum is not None:
            spectra[raw['name']] = spectrum

    sequence = parse_sequence(document.get('sequence'), spectra, violations)
    tau = sequence.total_duration() if sequence is not None else None
    grid = parse_grid(document.get('grid'), tau, violations, defaults.get('grid'))

    quadrature = dict(defaults.get('quadrature', {}))
    raw_quadrature = document.get('quadrature')
    raw_quadrature = {} if raw_quadrature is None else raw_quadrature
    if not isinstance(raw_quadrature, dict):
        violations.add('quadrature', "expected an object")
        raw_quadrature = {}
    quadrature.update(raw_quadrature)
    _unknown_keys(raw_quadrature, ('rule', 'end_corrections'), 'quadrature', violations)
    rule = quadrature.get('rule', DEFAULT_RULE)
    if rule not in QUADRATURE_RULES:
        violations.add('quadrature.rule', f"must be one of {list(QUADRATURE_RULES)}, got {rule!r}")
    end_corrections = quadrature.get('end_corrections', DEFAULT_END_CORRECTIONS)
    if not isinstance(end_corrections, bool):
        violations.add('quadrature.end_corrections', "expected true or false")

    tasks = parse_tasks(document.get('tasks'), list(spectra), violations)

    seed = document.get('seed', 0)
    if _integer(seed, 'seed', violations) is None:
        seed = 0
    output_dir = document.get('output_dir')
    if output_dir is not None and not isinstance(output_dir, str):
        violations.add('output_dir', "expected a string path")

    montecarlo, dump = parse_montecarlo(document.get('montecarlo'), seed, violations,
                                        defaults.get('montecarlo'))

    if violations or sequence is None or grid is None or montecarlo is None:
        return None, violations.items

    config = RunConfig(sequence, grid, tasks, rule, end_corrections, output_dir, seed, montecarlo, dump,
                       raw=document)
    return config, []


def read_document(path: str) -> Dict:
    """Read a JSON document, turning I/O and syntax problems into ConfigError"""
    try:
        with open(path, 'r') as f:
            return json.load(f)
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}", [{'path': '', 'message': str(e)}])
    except json.JSONDecodeError as e:
        location = f"line {e.lineno}, column {e.colno}"
        raise ConfigError(f"Config {path} is not valid JSON ({location})",
                          [{'path': '', 'message': f"{e.msg} at {location}"}])


def validate_run_config(path: str, defaults: Optional[Dict] = None) -> List[Dict[str, str]]:
    """All schema violations of a config file (empty if valid)"""
    document = read_document(path)
    _, violations = parse_run_config(document, Path(path).parent, defaults)
    return violations


def load_run_config(path: str, defaults: Optional[Dict] = None, seed: Optional[int] = None,
                    output_dir: Optional[str] = None) -> RunConfig:
    """Parse a config file; command-line seed and output directory take precedence"""
    document = read_document(path)
    if seed is not None:
        document = dict(document, seed=seed)
    config, violations = parse_run_config(document, Path(path).parent, defaults)
    if violations:
        summary = '; '.join(f"{v['path'] or '<root>'}: {v['message']}" for v in violations[:5])
        raise ConfigError(f"{len(violations)} violation(s) in {path}: {summary}", violations)
    if output_dir is not None:
        config.output_dir = output_dir
    config.source = str(path)
    logger.info(f"Loaded run config {path}: {config.sequence}, tasks {config.task_names}")
    return config


def sequence_from_config(spec: Dict, spectra: Dict[str, SpectralDensity]) -> PulseSequence:
    """Sequence from its config form; raises ConfigError with all violations"""
    violations = _Violations()
    sequence = parse_sequence(spec, spectra, violations)
    if violations or sequence is None:
        raise ConfigError("Invalid sequence config", violations.items)
    return sequence


def sequence_to_config(sequence: PulseSequence) -> Dict:
    return sequence.to_config()
