#!/usr/bin/env python3
"""
Example Circuits for FFTracer
Free induction decay, spin echo and a four-qubit nearest-neighbour QFT with
optional echo pulses.

QFT timing model: gates run back to back without idle padding. Each gate is a
single constant segment of its duration:

* Hadamard: pi rotation about (X + Z)/sqrt(2)
* controlled phase(phi): (phi / 4dt) (Z_1 + Z_2 - Z_1 Z_2), i.e. a ZZ coupling
  with local Z compensation
* SWAP: isotropic exchange (pi / 4dt) (XX + YY + ZZ)

Echo pulses are pi_x rotations on the noisy qubit driven in parallel with
gates that do not touch it, so the gate count stays 16. The noisy qubit is
idle (except for echoes) until the controlled phase with qubit 1, after
which the swap chain moves its state away.
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.basis import PAULI_MATRICES, build_pauli_basis, embed
from models.control_matrix import GateCache
from models.exceptions import CapacityError, ValidationError
from models.process import sequence_correlation_infidelities
from models.pulse import InstantaneousGate, NoiseChannel, PulseSequence, Segment, concatenate
from models.spectra import FrequencyGrid, PowerLawSpectrum, SpectralDensity, WhiteSpectrum

logger = logging.getLogger(__name__)

X, Y, Z = PAULI_MATRICES['X'], PAULI_MATRICES['Y'], PAULI_MATRICES['Z']

# (kind, first qubit, phase); two-qubit gates act on (q, q + 1)
QFT_GATES: Tuple[Tuple[str, int, float], ...] = (
    ('H', 0, 0.0), ('CP', 0, np.pi / 2), ('SWAP', 0, 0.0),
    ('CP', 1, np.pi / 4), ('SWAP', 1, 0.0),
    ('CP', 2, np.pi / 8), ('SWAP', 2, 0.0),
    ('H', 0, 0.0), ('CP', 0, np.pi / 2), ('SWAP', 0, 0.0),
    ('CP', 1, np.pi / 4), ('SWAP', 1, 0.0),
    ('H', 0, 0.0), ('CP', 0, np.pi / 2), ('SWAP', 0, 0.0),
    ('H', 0, 0.0),
)
# 0-based gate indices that carry an echo pulse: two before the controlled
# phase touching the noisy qubit, two after it
QFT_ECHO_GATES = (1, 3, 9, 13)


def _unit_white() -> WhiteSpectrum:
    return WhiteSpectrum(1.0)


def fid_sequence(tau: float, spectrum: Optional[SpectralDensity] = None,
                 noise_operator: Optional[np.ndarray] = None, channel: str = 'z') -> PulseSequence:
    """Free induction decay: one idle segment of duration tau"""
    noise_operator = Z if noise_operator is None else noise_operator
    spectrum = spectrum or _unit_white()
    d = len(noise_operator)
    segment = Segment.idle(tau, d, {channel: noise_operator})
    return PulseSequence((segment,), (NoiseChannel(channel, spectrum),), gate_labels=('idle',), label='fid')


def spin_echo_sequence(tau_idle: float, spectrum: Optional[SpectralDensity] = None,
                       mode: str = 'instantaneous', pulse_duration: Optional[float] = None,
                       amplitude: Optional[float] = None, noise_operator: Optional[np.ndarray] = None,
                       channel: str = 'z') -> PulseSequence:
    """idle - pi_x - idle, three gates

    ``finite`` mode drives amplitude * X / 2 for pulse_duration; the pulse area
    must be pi.
    """
    noise_operator = Z if noise_operator is None else noise_operator
    spectrum = spectrum or _unit_white()
    channels = (NoiseChannel(channel, spectrum),)
    idle = PulseSequence((Segment.idle(tau_idle, 2, {channel: noise_operator}),), channels, label='idle')

    if mode == 'instantaneous':
        pulse = InstantaneousGate(-1j * X, label='pi_x')
    elif mode == 'finite':
        if pulse_duration is None or not pulse_duration > 0:
            raise ValidationError(f"Finite pi pulse needs a positive duration, got {pulse_duration}",
                                  'pulse_duration')
        amplitude = np.pi / pulse_duration if amplitude is None else amplitude
        if abs(amplitude * pulse_duration - np.pi) > 1e-9 * np.pi:
            raise ValidationError(
                f"Pulse area {amplitude * pulse_duration:.6g} is not a pi rotation "
                f"(amplitude {amplitude:g}, duration {pulse_duration:g})",
                'amplitude',
            )
        segment = Segment(pulse_duration, amplitude * X / 2, {channel: noise_operator}, 'pi_x')
        pulse = PulseSequence((segment,), channels, label='pi_x')
    else:
        raise ValidationError(f"Unknown pi-pulse mode '{mode}', expected 'instantaneous' or 'finite'", 'mode')

    return concatenate([idle, pulse, idle], gate_labels=('idle_1', 'pi_x', 'idle_2'), label='spin_echo')


@dataclass(frozen=True)
class QFTTiming:
    single_qubit_duration: float = 1.0
    two_qubit_duration: float = 1.0

    def __post_init__(self):
        if not (self.single_qubit_duration > 0 and self.two_qubit_duration > 0):
            raise ValidationError("QFT gate durations must be positive")


def _gate_hamiltonian(kind: str, qubit: int, phase: float, duration: float, n_qubits: int) -> np.ndarray:
    if kind == 'H':
        local = np.pi / (2 * duration) * (X + Z) / np.sqrt(2)
        return embed(local, [qubit], n_qubits)
    if kind == 'CP':
        ZI, IZ, ZZ = np.kron(Z, np.eye(2)), np.kron(np.eye(2), Z), np.kron(Z, Z)
        return embed(phase / (4 * duration) * (ZI + IZ - ZZ), [qubit, qubit + 1], n_qubits)
    if kind == 'SWAP':
        exchange = np.kron(X, X) + np.kron(Y, Y) + np.kron(Z, Z)
        return embed(np.pi / (4 * duration) * exchange, [qubit, qubit + 1], n_qubits)
    raise ValidationError(f"Unknown gate kind '{kind}'")


def _gate_label(kind: str, qubit: int, phase: float) -> str:
    if kind == 'H':
        return f"H{qubit}"
    if kind == 'CP':
        return f"CP{qubit}{qubit + 1}(pi/{int(round(np.pi / phase))})"
    return f"SWAP{qubit}{qubit + 1}"


def qft_sequence(n_qubits: int = 4, with_echo: bool = False, timing: Optional[QFTTiming] = None,
                 spectrum: Optional[SpectralDensity] = None, noise_qubit: int = 3,
                 noise_pauli: str = 'Y', echo_gates: Sequence[int] = QFT_ECHO_GATES) -> PulseSequence:
    """Nearest-neighbour QFT on four qubits, 16 gates, noise on one qubit"""
    if n_qubits != 4:
        raise CapacityError(f"The QFT builder supports 4 qubits only, got {n_qubits}")
    if not 0 <= noise_qubit < n_qubits:
        raise ValidationError(f"Noise qubit must lie in [0, {n_qubits}), got {noise_qubit}", 'noise_qubit')
    if noise_pauli not in ('X', 'Y', 'Z'):
        raise ValidationError(f"Noise Pauli must be X, Y or Z, got '{noise_pauli}'", 'noise_pauli')
    timing = timing or QFTTiming()
    spectrum = spectrum or _unit_white()

    channel = f"{noise_pauli.lower()}{noise_qubit + 1}"
    noise_operator = embed(PAULI_MATRICES[noise_pauli], [noise_qubit], n_qubits)
    channels = (NoiseChannel(channel, spectrum),)
    echo_gates = set(echo_gates) if with_echo else set()

    gates, labels = [], []
    for g, (kind, qubit, phase) in enumerate(QFT_GATES):
        duration = timing.single_qubit_duration if kind == 'H' else timing.two_qubit_duration
        hamiltonian = _gate_hamiltonian(kind, qubit, phase, duration, n_qubits)
        label = f"{g + 1}:{_gate_label(kind, qubit, phase)}"
        if g in echo_gates:
            touched = {qubit} if kind == 'H' else {qubit, qubit + 1}
            if noise_qubit in touched:
                raise ValidationError(f"Echo pulse cannot run in parallel with gate {label}", 'noise_qubit')
            hamiltonian = hamiltonian + embed(np.pi / (2 * duration) * X, [noise_qubit], n_qubits)
            label += '+echo'
        segment = Segment(duration, hamiltonian, {channel: noise_operator}, label)
        gates.append(PulseSequence((segment,), channels, label=label))
        labels.append(label)

    name = 'qft_echo' if with_echo else 'qft'
    sequence = concatenate(gates, gate_labels=labels, label=name)
    logger.info(f"Built {name}: {sequence}")
    return sequence


def qft_unitary(n_qubits: int) -> np.ndarray:
    """exp(2 pi i j k / N) / sqrt(N), qubit 0 the most significant bit"""
    size = 2**n_qubits
    j, k = np.meshgrid(np.arange(size), np.arange(size), indexing='ij')
    return np.exp(2j * np.pi * j * k / size) / np.sqrt(size)


def qft_acceptance_spectrum() -> PowerLawSpectrum:
    """1/f spectrum giving a no-echo QFT infidelity around 1e-2"""
    return PowerLawSpectrum(amplitude=3e-5, exponent=1.0, omega_min=1e-4, omega_max=1e2)


PARAM_KINDS = {'positive': 'a positive number', 'number': 'a finite number', 'integer': 'an integer',
               'boolean': 'true or false', 'string': 'a string'}


@dataclass(frozen=True)
class BuilderParam:
    """One builder parameter

    ``kind`` is 'positive' (finite number > 0), 'number', 'integer',
    'boolean' or 'string'; ``choices`` restricts the accepted values.
    """
    name: str
    kind: str
    required: bool = False
    choices: Tuple = ()

    def check(self, value: Any) -> Optional[str]:
        """What is wrong with value, or None"""
        if self.kind == 'boolean':
            valid = isinstance(value, bool)
        elif self.kind == 'string':
            valid = isinstance(value, str)
        elif self.kind == 'integer':
            valid = isinstance(value, int) and not isinstance(value, bool)
        else:
            valid = isinstance(value, (int, float)) and not isinstance(value, bool) and bool(np.isfinite(value))
        if not valid:
            return f"expected {PARAM_KINDS[self.kind]}, got {value!r}"
        if self.kind == 'positive' and value <= 0:
            return f"must be positive, got {value}"
        if self.choices and value not in self.choices:
            return f"must be one of {list(self.choices)}, got {value!r}"
        return None


@dataclass(frozen=True)
class Builder:
    constructor: Callable[[Dict], PulseSequence]
    params: Tuple[BuilderParam, ...]

    @property
    def names(self) -> List[str]:
        return [param.name for param in self.params]

    def check(self, params: Dict) -> Dict[str, str]:
        """Problems keyed by parameter name: unknown, missing or invalid values"""
        problems = {key: f"unknown parameter; allowed: {self.names}" for key in params if key not in self.names}
        for param in self.params:
            if param.name in params:
                problem = param.check(params[param.name])
                if problem:
                    problems[param.name] = problem
            elif param.required:
                problems[param.name] = "required parameter missing"
        return problems


def _build_fid(params: Dict) -> PulseSequence:
    return fid_sequence(float(params['tau']), channel=params.get('channel', 'z'))


def _build_spin_echo(params: Dict) -> PulseSequence:
    return spin_echo_sequence(float(params['tau_idle']), mode=params.get('mode', 'instantaneous'),
                              pulse_duration=params.get('pulse_duration'),
                              amplitude=params.get('amplitude'), channel=params.get('channel', 'z'))


def _build_qft(params: Dict) -> PulseSequence:
    timing = QFTTiming(float(params.get('single_qubit_duration', 1.0)),
                       float(params.get('two_qubit_duration', 1.0)))
    return qft_sequence(params.get('n_qubits', 4), params.get('with_echo', False), timing,
                        noise_qubit=params.get('noise_qubit', 3), noise_pauli=params.get('noise_pauli', 'Y'))


BUILDERS: Dict[str, Builder] = {
    'fid': Builder(_build_fid, (
        BuilderParam('tau', 'positive', required=True),
        BuilderParam('channel', 'string'),
    )),
    'spin_echo': Builder(_build_spin_echo, (
        BuilderParam('tau_idle', 'positive', required=True),
        BuilderParam('mode', 'string', choices=('instantaneous', 'finite')),
        BuilderParam('pulse_duration', 'positive'),
        BuilderParam('amplitude', 'number'),
        BuilderParam('channel', 'string'),
    )),
    'qft': Builder(_build_qft, (
        BuilderParam('n_qubits', 'integer', choices=(4,)),
        BuilderParam('with_echo', 'boolean'),
        BuilderParam('single_qubit_duration', 'positive'),
        BuilderParam('two_qubit_duration', 'positive'),
        BuilderParam('noise_qubit', 'integer', choices=(0, 1, 2, 3)),
        BuilderParam('noise_pauli', 'string', choices=('X', 'Y', 'Z')),
    )),
}


def build_circuit(builder: str, params: Dict, spectra: Optional[Dict[str, SpectralDensity]] = None) -> PulseSequence:
    if builder not in BUILDERS:
        raise ValidationError(f"Unknown builder '{builder}', expected one of {sorted(BUILDERS)}")
    problems = BUILDERS[builder].check(params)
    if problems:
        name, problem = next(iter(problems.items()))
        raise ValidationError(f"Builder {builder}, parameter {name}: {problem}", name)
    sequence = BUILDERS[builder].constructor(params)
    return sequence.with_spectra(spectra) if spectra else sequence


def circuit_config(builder: str, params: Dict, spectra: Dict[str, SpectralDensity],
                   tasks: Sequence[str] = ('fidelity_ff', 'fidelity'), grid: Optional[Dict] = None,
                   **extra) -> Dict:
    """Run config (builder form) reproducing a circuit"""
    config = {
        'schema_version': 1,
        'sequence': {'builder': builder, 'params': dict(params)},
        'channels': [{'name': name, 'spectrum': spectrum.to_config()} for name, spectrum in spectra.items()],
        'tasks': list(tasks),
    }
    if grid is not None:
        config['grid'] = dict(grid)
    config.update(extra)
    return config


def qft_configs(spectrum: Optional[SpectralDensity] = None) -> List[Dict]:
    """Configs of the QFT echo experiment, without and with echo"""
    spectrum = spectrum or qft_acceptance_spectrum()
    grid = {'spacing': 'log', 'omega_min': 1e-5, 'omega_max': 1e3, 'points': 4000}
    tasks = ('fidelity', 'correlation_infidelities', 'correlation_ff')
    return [circuit_config('qft', {'with_echo': echo}, {'y4': spectrum}, tasks, grid,
                           quadrature={'rule': 'trapezoid', 'end_corrections': True})
            for echo in (False, True)]


def qft_echo_comparison(spectrum: Optional[SpectralDensity] = None, grid: Optional[FrequencyGrid] = None,
                        cache: Optional[GateCache] = None) -> Dict[str, Any]:
    """Correlation infidelities of the QFT without and with echo pulses

    Grid and quadrature follow ``qft_configs`` unless a grid is passed. Returns
    both matrices and the ratio of their totals (no echo over echo).
    """
    spectrum = spectrum or qft_acceptance_spectrum()
    config = qft_configs(spectrum)[0]
    if grid is None:
        grid = FrequencyGrid.log(config['grid']['omega_min'], config['grid']['omega_max'], config['grid']['points'])
    basis = build_pauli_basis(4)
    cache = cache or GateCache()
    no_echo, echo = [sequence_correlation_infidelities(qft_sequence(with_echo=flag, spectrum=spectrum), grid, basis,
                                                       config['quadrature']['rule'],
                                                       config['quadrature']['end_corrections'], cache)
                     for flag in (False, True)]
    ratio = no_echo.total() / echo.total()
    logger.info(f"QFT infidelity without echo {no_echo.total():.4e}, with echo {echo.total():.4e}, "
                f"ratio {ratio:.2f}")
    return {'no_echo': no_echo, 'echo': echo, 'ratio': ratio}
