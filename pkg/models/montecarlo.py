#!/usr/bin/env python3
"""
Monte-Carlo Oracle for FFTracer
Brute-force check of the perturbative results: Gaussian noise trajectories
with a target spectrum, exact piecewise-constant propagation and averaging of
the error processes.
"""

import logging
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from models.basis import build_pauli_basis, transfer_matrix
from models.exceptions import PropagationError, StepAlignmentError, ValidationError
from models.process import average_gate_fidelity
from models.propagation import total_propagator
from models.pulse import InstantaneousGate, PulseSequence, Segment
from models.spectra import SpectralDensity, xi_estimate

logger = logging.getLogger(__name__)

ALIGNMENT_TOL = 1e-9
UNITARY_TOL = 1e-8


@dataclass(frozen=True)
class TrajectoryConfig:
    """Sampling and averaging parameters

    Either ``dt`` or ``steps_per_segment`` fixes the step; with neither, the
    shortest segment is split into 1000 steps. ``window_factor`` > 1 synthesizes
    noise over a longer window than the sequence, which resolves frequencies
    below 2 pi / tau.
    """

    n_trajectories: int = 1000
    dt: Optional[float] = None
    steps_per_segment: Optional[int] = None
    seed: int = 0
    window_factor: int = 1
    workers: int = 1
    progress: bool = False

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ValidationError(f"Need at least one trajectory, got {self.n_trajectories}")
        if self.dt is not None and not self.dt > 0:
            raise ValidationError(f"Step dt must be positive, got {self.dt}")
        if self.steps_per_segment is not None and self.steps_per_segment < 1:
            raise ValidationError(f"steps_per_segment must be >= 1, got {self.steps_per_segment}")
        if self.window_factor < 1:
            raise ValidationError(f"window_factor must be >= 1, got {self.window_factor}")
        if self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}")

    def step(self, sequence: PulseSequence) -> float:
        if self.dt is not None:
            return float(self.dt)
        shortest = min(seg.duration for seg in sequence.segments)
        return shortest / (self.steps_per_segment or 1000)


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for trajectory ``index``, independent of how trajectories are distributed"""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def synthesize_trajectory(spectrum: SpectralDensity, n_samples: int, dt: float,
                          rng: np.random.Generator, window_factor: int = 1) -> np.ndarray:
    """Stationary Gaussian samples b(k dt), k < n_samples, with two-sided PSD S

    Fourier amplitudes X_m on omega_m = 2 pi m / (N dt) are complex Gaussian
    with E|X_m|**2 = N S(omega_m) / dt (real at m = 0 and at Nyquist), so the
    sample variance is (1/2pi) sum_m S(omega_m) domega.
    """
    n_total = int(n_samples) * int(window_factor)
    omega = 2 * np.pi * np.fft.rfftfreq(n_total, dt)
    scale = np.sqrt(n_total * spectrum.evaluate(omega) / dt)
    amplitudes = scale * (rng.standard_normal(len(omega)) + 1j * rng.standard_normal(len(omega))) / np.sqrt(2)
    amplitudes[0] = scale[0] * rng.standard_normal()
    if n_total % 2 == 0:
        amplitudes[-1] = scale[-1] * rng.standard_normal()
    return np.fft.irfft(amplitudes, n=n_total)[:n_samples]


def periodogram(samples: np.ndarray, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """One-sided grid, two-sided density estimate dt |FFT|**2 / N"""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[-1]
    omega = 2 * np.pi * np.fft.rfftfreq(n, dt)
    power = dt * np.abs(np.fft.rfft(samples, axis=-1))**2 / n
    return omega, power


def _step_counts(sequence: PulseSequence, dt: float) -> List[int]:
    counts = []
    for position, item in enumerate(sequence.items):
        if isinstance(item, InstantaneousGate):
            counts.append(0)
            continue
        ratio = item.duration / dt
        count = int(round(ratio))
        if count < 1 or abs(ratio - count) > ALIGNMENT_TOL * max(1.0, ratio):
            raise StepAlignmentError(
                f"Step {dt:g} does not divide segment {position} of duration {item.duration:g}"
            )
        counts.append(count)
    return counts


def ordered_product(unitaries: np.ndarray) -> np.ndarray:
    """U_n ... U_2 U_1 for a stack (U_1, ..., U_n), by pairwise reduction"""
    stack = np.asarray(unitaries)
    while len(stack) > 1:
        paired = stack[1:len(stack) - len(stack) % 2:2] @ stack[0:len(stack) - len(stack) % 2:2]
        if len(stack) % 2:
            paired = np.concatenate([paired, stack[-1:]])
        stack = paired
    return stack[0]


def _step_unitaries(segment: Segment, noise: Mapping[str, np.ndarray], dt: float, count: int) -> np.ndarray:
    d = segment.dimension
    hamiltonians = np.broadcast_to(segment.hamiltonian, (count, d, d)).astype(complex)
    for name, values in noise.items():
        hamiltonians = hamiltonians + values[:, None, None] * segment.noise_operators[name][None]
    energies, vectors = np.linalg.eigh(hamiltonians)
    return (vectors * np.exp(-1j * energies * dt)[:, None, :]) @ np.conj(np.swapaxes(vectors, -1, -2))


def error_propagator(sequence: PulseSequence, noise: Mapping[str, np.ndarray], dt: float,
                     counts: Sequence[int], ideal: np.ndarray) -> np.ndarray:
    """Q^dagger U for one noise realization (noise sampled per step over the whole sequence)"""
    factors = []
    cursor = 0
    for item, count in zip(sequence.items, counts):
        if isinstance(item, InstantaneousGate):
            factors.append(item.unitary[None])
            continue
        window = {name: values[cursor:cursor + count] for name, values in noise.items()}
        factors.append(_step_unitaries(item, window, dt, count))
        cursor += count
    realized = ordered_product(np.concatenate(factors))
    return ideal.conj().T @ realized


def _simulate_chunk(task) -> List[np.ndarray]:
    sequence, spectra, config, indices, dt, counts, ideal, n_qubits = task
    basis = build_pauli_basis(n_qubits)
    n_steps = sum(counts)
    identity = np.eye(sequence.dimension)
    results = []
    for index in indices:
        rng = trajectory_rng(config.seed, index)
        noise = {name: synthesize_trajectory(spectra[name], n_steps, dt, rng, config.window_factor)
                 for name in sequence.channel_names}
        error = error_propagator(sequence, noise, dt, counts, ideal)
        defect = float(np.linalg.norm(error.conj().T @ error - identity))
        if defect > UNITARY_TOL:
            raise PropagationError(f"Trajectory {index} propagator not unitary", defect)
        results.append(transfer_matrix(error, basis))
    return results


@dataclass
class MonteCarloResult:
    """Averaged error transfer matrix with per-entry standard errors"""

    transfer_matrix: np.ndarray
    standard_error: np.ndarray
    infidelity: float
    infidelity_error: float
    n_trajectories: int
    dt: float
    xi: float
    samples: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def fidelity(self) -> float:
        return 1.0 - self.infidelity

    def to_dict(self) -> Dict:
        return {'infidelity': self.infidelity, 'infidelity_error': self.infidelity_error,
                'n_trajectories': self.n_trajectories, 'dt': self.dt, 'xi': self.xi}


def simulate_process(sequence: PulseSequence, config: TrajectoryConfig,
                     spectra: Optional[Mapping[str, SpectralDensity]] = None,
                     keep_samples: bool = False) -> MonteCarloResult:
    """Average of rho -> U~ rho U~^dagger over noise realizations, U~ = Q^dagger U

    Trajectory i always draws from the generator seeded with (seed, i), and the
    average is taken over the trajectories in index order, so the result does
    not depend on the number of workers.
    """
    spectra = dict(spectra or sequence.spectra)
    n_qubits = int(round(np.log2(sequence.dimension)))
    dt = config.step(sequence)
    counts = _step_counts(sequence, dt)
    ideal = total_propagator(sequence)

    fastest = max(np.abs(np.linalg.eigvalsh(seg.hamiltonian)).max() for seg in sequence.segments)
    if fastest * dt > 0.1:
        logger.warning(f"Step dt = {dt:g} is coarse against control energy {fastest:.3g}")

    xi = xi_estimate(sequence, bandwidth=np.pi / dt).total
    logger.info(f"Monte Carlo: {config.n_trajectories} trajectories, dt = {dt:g}, xi = {xi:.3g}")

    indices = np.arange(config.n_trajectories)
    n_chunks = max(1, min(config.n_trajectories, 4 * config.workers))
    chunks = [chunk for chunk in np.array_split(indices, n_chunks) if len(chunk)]
    tasks = [(sequence, spectra, config, chunk, dt, counts, ideal, n_qubits) for chunk in chunks]

    matrices: List[np.ndarray] = []
    with tqdm(total=config.n_trajectories, disable=not config.progress, desc='trajectories') as bar:
        if config.workers > 1:
            with Pool(processes=config.workers) as pool:
                for result in pool.imap(_simulate_chunk, tasks):
                    matrices.extend(result)
                    bar.update(len(result))
        else:
            for task in tasks:
                result = _simulate_chunk(task)
                matrices.extend(result)
                bar.update(len(result))

    stack = np.array(matrices)
    n = len(stack)
    d = sequence.dimension
    mean = stack.mean(axis=0)
    infidelities = 1.0 - (np.trace(stack, axis1=1, axis2=2) + d) / (d * (d + 1))
    if n > 1:
        standard_error = stack.std(axis=0, ddof=1) / np.sqrt(n)
        infidelity_error = float(infidelities.std(ddof=1) / np.sqrt(n))
    else:
        standard_error = np.zeros_like(mean)
        infidelity_error = 0.0

    return MonteCarloResult(mean, standard_error, 1.0 - average_gate_fidelity(mean, d),
                            infidelity_error, n, dt, xi, stack if keep_samples else None)
