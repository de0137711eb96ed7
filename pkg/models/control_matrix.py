#!/usr/bin/env python3
"""
Control Matrix for FFTracer
Basis coefficients of the toggling-frame noise operators, in time and
frequency, and the rule that assembles a sequence's control matrix from the
control matrices of its gates.

For a segment starting at t_s in frame Q with H = V diag(lambda) V^dagger,

    B_k(omega) = exp(i omega t_s) tr(Q^dagger V [(V^dagger B V) o K] V^dagger Q sigma_k)
    K_ij = int_0^dt exp(i phi_ij t) dt,   phi_ij = omega + lambda_i - lambda_j

K is evaluated as dt exp(i phi dt / 2) sinc(phi dt / 2), which is exact and
free of cancellation at phi -> 0. Only omega > 0 is stored; B(-omega) is the
complex conjugate.
"""

import hashlib
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.basis import OperatorBasis, transfer_matrix
from models.exceptions import ChannelMismatchError, FrameMismatchError, TimeRangeError, ValidationError
from models.propagation import (PropagatorSet, SegmentEigensystem, cumulative_from_items,
                                cumulative_propagators)
from models.pulse import Item, PulseSequence, Segment, items_hash
from models.spectra import FrequencyGrid

logger = logging.getLogger(__name__)

# complex entries per frequency chunk
CHUNK_ENTRIES = 2**21
OFFSET_TOL = 1e-12
FRAME_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ControlMatrix:
    """B_{alpha k}(omega) on a grid; values shape (channels, d**2, frequencies)"""

    values: np.ndarray
    grid: FrequencyGrid
    duration: float
    channels: Tuple[str, ...]
    basis_labels: Tuple[str, ...]
    total_propagator: np.ndarray
    parts: Tuple['GatePart', ...] = ()
    label: str = ''

    @property
    def omega(self) -> np.ndarray:
        return self.grid.values

    @property
    def n_gates(self) -> int:
        return max(1, len(self.parts))

    def negative_frequency_values(self) -> np.ndarray:
        """B(-omega) on the mirrored grid"""
        return self.values.conj()

    def channel(self, name: str) -> np.ndarray:
        try:
            return self.values[self.channels.index(name)]
        except ValueError:
            raise ChannelMismatchError(f"Unknown channel '{name}'", [name])


@dataclass(frozen=True, eq=False)
class GatePart:
    """A gate's own control matrix with its frame Q_{g-1} and start time t_{g-1}"""

    control_matrix: ControlMatrix
    frame: np.ndarray
    offset: float
    label: str = ''


class _SegmentTerms:
    """Frequency-independent tensors of one segment

    ``weights[a, k, i*d + j] = (V^dag B_a V)_ij (W^dag sigma_k W)_ji`` with W = Q^dag V.
    """

    def __init__(self, segment: Segment, eig: SegmentEigensystem, frame: np.ndarray,
                 channels: Sequence[str], basis: OperatorBasis):
        V = eig.eigenvectors
        W = frame.conj().T @ V
        rotated_basis = W.conj().T @ basis.elements @ W
        noise = np.array([V.conj().T @ segment.noise_operators[name] @ V for name in channels])
        d = segment.dimension
        self.weights = np.einsum('aij,kji->akij', noise, rotated_basis).reshape(len(channels), len(basis.elements), d * d)
        self.gaps = (eig.eigenvalues[:, None] - eig.eigenvalues[None, :]).ravel()
        self.duration = segment.duration

    def frequency(self, omega: np.ndarray) -> np.ndarray:
        """Segment integral starting at local time 0; shape (channels, d**2, len(omega))"""
        phi = omega[:, None] + self.gaps[None, :]
        half = phi * self.duration / 2
        kernel = self.duration * np.exp(1j * half) * np.sinc(half / np.pi)
        return self.weights @ kernel.T

    def time(self, local_times: np.ndarray) -> np.ndarray:
        """B_k at local times; shape (len(local_times), channels, d**2), real"""
        phases = np.exp(1j * local_times[:, None] * self.gaps[None, :])
        return np.einsum('akm,tm->tak', self.weights, phases).real


def _check_basis(dimension: int, basis: OperatorBasis):
    if basis.dimension != dimension:
        raise ValidationError(f"Basis dimension {basis.dimension} does not match sequence dimension {dimension}")


def _items_control_matrix(items: Sequence[Item], eigensystems: Sequence[Optional[SegmentEigensystem]],
                          frames: Sequence[np.ndarray], start_times: np.ndarray,
                          channels: Sequence[str], basis: OperatorBasis,
                          omega: np.ndarray) -> np.ndarray:
    n_basis = len(basis.elements)
    values = np.zeros((len(channels), n_basis, len(omega)), dtype=complex)
    if not channels:
        return values
    chunk = max(1, CHUNK_ENTRIES // (basis.dimension**2 * max(1, len(channels)) * 4))
    for item, eig, frame, start in zip(items, eigensystems, frames, start_times):
        if eig is None:
            continue
        terms = _SegmentTerms(item, eig, frame, channels, basis)
        for lo in range(0, len(omega), chunk):
            w = omega[lo:lo + chunk]
            values[:, :, lo:lo + chunk] += np.exp(1j * w * start) * terms.frequency(w)
    return values


def control_matrix_freq(sequence: PulseSequence, basis: OperatorBasis, grid: FrequencyGrid,
                        propagators: Optional[PropagatorSet] = None) -> ControlMatrix:
    """Whole-sequence control matrix by closed-form segment integrals"""
    _check_basis(sequence.dimension, basis)
    propagators = propagators or cumulative_propagators(sequence)
    values = _items_control_matrix(sequence.items, propagators.eigensystems, propagators.cumulative[:-1],
                                   propagators.start_times[:-1], sequence.channel_names, basis,
                                   grid.values)
    return ControlMatrix(values, grid, sequence.total_duration(), tuple(sequence.channel_names),
                         basis.labels, propagators.total, label=sequence.label)


def segment_time_function(sequence: PulseSequence, basis: OperatorBasis, item_index: int,
                          propagators: Optional[PropagatorSet] = None) -> Callable[[np.ndarray], np.ndarray]:
    """Callable local_times -> B_{alpha k}(t_s + local_times), shape (times, channels, d**2)"""
    propagators = propagators or cumulative_propagators(sequence)
    segment = sequence.items[item_index]
    if not isinstance(segment, Segment):
        raise ValidationError(f"Item {item_index} is not a segment")
    terms = _SegmentTerms(segment, propagators.eigensystems[item_index],
                          propagators.cumulative[item_index], sequence.channel_names, basis)
    return lambda local_times: terms.time(np.atleast_1d(np.asarray(local_times, dtype=float)))


def segment_coefficients_time(sequence: PulseSequence, basis: OperatorBasis, item_index: int,
                              local_times: np.ndarray,
                              propagators: Optional[PropagatorSet] = None) -> np.ndarray:
    return segment_time_function(sequence, basis, item_index, propagators)(local_times)


def control_matrix_time(sequence: PulseSequence, basis: OperatorBasis, t: float,
                        propagators: Optional[PropagatorSet] = None) -> np.ndarray:
    """B_{alpha k}(t), shape (channels, d**2)

    At an instant shared by an instantaneous gate and a segment start, the
    frame after the gate is used.
    """
    _check_basis(sequence.dimension, basis)
    tau = sequence.total_duration()
    if not np.isfinite(t) or t < 0 or t > tau * (1 + 1e-14):
        raise TimeRangeError(f"Time {t} outside [0, {tau}]")

    propagators = propagators or cumulative_propagators(sequence)
    positions = [i for i, item in enumerate(sequence.items) if isinstance(item, Segment)]
    starts = propagators.start_times[positions]
    slot = max(0, int(np.searchsorted(starts, t, side='right')) - 1)
    item_index = positions[slot]
    local = min(t - starts[slot], sequence.items[item_index].duration)
    return segment_coefficients_time(sequence, basis, item_index, [local], propagators)[0]


def cache_key(items: Sequence[Item], channels: Sequence[str], grid: FrequencyGrid,
              basis: OperatorBasis) -> str:
    digest = hashlib.sha256(items_hash(items, channels).encode())
    digest.update(np.ascontiguousarray(grid.values).tobytes())
    digest.update(','.join(basis.labels).encode())
    return digest.hexdigest()


class GateCache:
    """Per-gate control matrices keyed by content, optionally backed by a persistent store

    The backend needs ``load(key) -> Optional[ControlMatrix]`` and
    ``store(key, control_matrix)``.
    """

    def __init__(self, backend=None):
        self.logger = logging.getLogger(__name__)
        self.backend = backend
        self._memory: Dict[str, ControlMatrix] = {}
        self.hits = 0
        self.misses = 0

    def get(self, key: str) -> Optional[ControlMatrix]:
        if key in self._memory:
            self.hits += 1
            return self._memory[key]
        if self.backend is not None:
            try:
                found = self.backend.load(key)
            except Exception as e:
                self.logger.error(f"Error reading control-matrix cache: {e}")
                found = None
            if found is not None:
                self.hits += 1
                self._memory[key] = found
                return found
        self.misses += 1
        return None

    def put(self, key: str, control_matrix: ControlMatrix):
        self._memory[key] = control_matrix
        if self.backend is not None:
            try:
                self.backend.store(key, control_matrix)
            except Exception as e:
                self.logger.error(f"Error writing control-matrix cache: {e}")

    def __len__(self) -> int:
        return len(self._memory)


def gate_parts(sequence: PulseSequence, basis: OperatorBasis, grid: FrequencyGrid,
               propagators: Optional[PropagatorSet] = None,
               cache: Optional[GateCache] = None) -> List[GatePart]:
    """Each gate's control matrix in its own frame, with frame Q_{g-1} and offset t_{g-1}"""
    _check_basis(sequence.dimension, basis)
    propagators = propagators or cumulative_propagators(sequence)
    channels = sequence.channel_names
    frames = propagators.gate_frames()
    offsets = propagators.boundary_times[:-1]

    parts = []
    for g in range(sequence.n_gates):
        items = sequence.gate_items(g)
        key = cache_key(items, channels, grid, basis)
        cm = cache.get(key) if cache is not None else None
        if cm is None:
            start = sequence.gate_boundaries[g]
            eigensystems = propagators.eigensystems[start:start + len(items)]
            _, local_frames, _ = cumulative_from_items(items, sequence.dimension)
            local_starts = np.concatenate([[0.0], np.cumsum([item.duration for item in items])])
            values = _items_control_matrix(items, eigensystems, local_frames[:-1], local_starts[:-1],
                                           channels, basis, grid.values)
            cm = ControlMatrix(values, grid, float(local_starts[-1]), tuple(channels), basis.labels,
                               local_frames[-1], label=sequence.gate_labels[g])
            if cache is not None:
                cache.put(key, cm)
        parts.append(GatePart(cm, frames[g], float(offsets[g]), sequence.gate_labels[g]))
    return parts


def validate_parts(parts: Sequence[GatePart], basis: OperatorBasis):
    """Raise if parts disagree in grid, channels, basis, offsets or frames"""
    if not parts:
        raise FrameMismatchError("No gate parts given")
    first = parts[0].control_matrix
    if tuple(first.basis_labels) != tuple(basis.labels):
        raise FrameMismatchError("Control matrix basis does not match the given basis")

    identity = np.eye(basis.dimension)
    if abs(parts[0].offset) > OFFSET_TOL or np.linalg.norm(parts[0].frame - identity) > FRAME_TOL:
        raise FrameMismatchError("First gate must start at t = 0 in the identity frame")

    scale = sum(part.control_matrix.duration for part in parts)
    for g, (prev, part) in enumerate(zip(parts, parts[1:]), start=1):
        cm = part.control_matrix
        if not cm.grid.matches(first.grid):
            raise FrameMismatchError(f"Gate {g} uses a different frequency grid")
        if cm.channels != first.channels:
            offending = sorted(set(cm.channels) ^ set(first.channels))
            raise ChannelMismatchError(f"Gate {g} channels {list(cm.channels)} differ", offending)
        if tuple(cm.basis_labels) != tuple(first.basis_labels):
            raise FrameMismatchError(f"Gate {g} uses a different basis")
        expected_offset = prev.offset + prev.control_matrix.duration
        if abs(part.offset - expected_offset) > OFFSET_TOL * max(1.0, scale):
            raise FrameMismatchError(f"Gate {g} starts at {part.offset}, expected {expected_offset}")
        expected_frame = prev.control_matrix.total_propagator @ prev.frame
        if np.linalg.norm(part.frame - expected_frame) > FRAME_TOL:
            raise FrameMismatchError(f"Gate {g} frame is inconsistent with the preceding gates")


def gate_contributions(parts: Sequence[GatePart], basis: OperatorBasis) -> np.ndarray:
    """C^(g) = exp(i omega t_{g-1}) R^(g) B^(g)(omega); shape (G, channels, d**2, frequencies)

    R^(g) is the transfer matrix of rho -> Q_{g-1}^dag rho Q_{g-1}.
    """
    validate_parts(parts, basis)
    omega = parts[0].control_matrix.omega
    contributions = []
    for part in parts:
        rotation = transfer_matrix(part.frame.conj().T, basis)
        rotated = np.einsum('kl,alw->akw', rotation, part.control_matrix.values)
        contributions.append(np.exp(1j * omega * part.offset) * rotated)
    return np.array(contributions)


def concatenate_control_matrices(parts: Sequence[GatePart], basis: OperatorBasis) -> ControlMatrix:
    """Sequence control matrix from its gates' control matrices"""
    contributions = gate_contributions(parts, basis)
    first, last = parts[0].control_matrix, parts[-1]
    duration = last.offset + last.control_matrix.duration
    total = last.control_matrix.total_propagator @ last.frame
    return ControlMatrix(contributions.sum(axis=0), first.grid, duration, first.channels,
                         first.basis_labels, total, tuple(parts))


def sequence_control_matrix(sequence: PulseSequence, basis: OperatorBasis, grid: FrequencyGrid,
                            cache: Optional[GateCache] = None) -> ControlMatrix:
    """Control matrix assembled gate by gate, with the parts attached"""
    propagators = cumulative_propagators(sequence)
    parts = gate_parts(sequence, basis, grid, propagators, cache)
    return concatenate_control_matrices(parts, basis)
