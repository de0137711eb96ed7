#!/usr/bin/env python3
"""
Pulse Sequences for FFTracer
Piecewise-constant control segments, instantaneous gates, noise channels and
the gate structure of a sequence.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from models.basis import hermiticity_defect
from models.exceptions import ChannelMismatchError, ValidationError
from models.spectra import SpectralDensity

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10


def _square_matrix(value, name: str) -> np.ndarray:
    matrix = np.array(value, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValidationError(f"{name} must be a square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValidationError(f"{name} contains non-finite entries")
    matrix.setflags(write=False)
    return matrix


@dataclass(frozen=True, eq=False)
class Segment:
    """Constant control Hamiltonian and noise operators over a duration"""

    duration: float
    hamiltonian: np.ndarray
    noise_operators: Mapping[str, np.ndarray] = field(default_factory=dict)
    label: str = ''

    def __post_init__(self):
        if not np.isfinite(self.duration) or self.duration <= 0:
            raise ValidationError(f"Segment duration must be positive, got {self.duration}")
        hamiltonian = _square_matrix(self.hamiltonian, 'Control Hamiltonian')
        defect = hermiticity_defect(hamiltonian)
        if defect > HERMITIAN_TOL:
            raise ValidationError(f"Control Hamiltonian is not Hermitian (defect {defect:.3e})")

        operators = {}
        for name, op in self.noise_operators.items():
            op = _square_matrix(op, f"Noise operator '{name}'")
            if op.shape != hamiltonian.shape:
                raise ValidationError(
                    f"Noise operator '{name}' has shape {op.shape}, expected {hamiltonian.shape}"
                )
            defect = hermiticity_defect(op)
            if defect > HERMITIAN_TOL:
                raise ValidationError(f"Noise operator '{name}' is not Hermitian (defect {defect:.3e})")
            operators[name] = op

        object.__setattr__(self, 'duration', float(self.duration))
        object.__setattr__(self, 'hamiltonian', hamiltonian)
        object.__setattr__(self, 'noise_operators', operators)

    @property
    def dimension(self) -> int:
        return self.hamiltonian.shape[0]

    @classmethod
    def idle(cls, duration: float, dimension: int,
             noise_operators: Optional[Mapping[str, np.ndarray]] = None, label: str = 'idle') -> 'Segment':
        return cls(duration, np.zeros((dimension, dimension)), dict(noise_operators or {}), label)


@dataclass(frozen=True, eq=False)
class InstantaneousGate:
    """Ideal unitary applied between segments; no noise exposure"""

    unitary: np.ndarray
    label: str = ''

    def __post_init__(self):
        unitary = _square_matrix(self.unitary, 'Instantaneous gate')
        defect = np.linalg.norm(unitary.conj().T @ unitary - np.eye(len(unitary)))
        if defect > UNITARY_TOL:
            raise ValidationError(f"Instantaneous gate is not unitary (defect {defect:.3e})")
        object.__setattr__(self, 'unitary', unitary)

    @property
    def dimension(self) -> int:
        return self.unitary.shape[0]

    @property
    def duration(self) -> float:
        return 0.0


Item = Union[Segment, InstantaneousGate]


@dataclass(frozen=True, eq=False)
class NoiseChannel:
    name: str
    spectrum: SpectralDensity

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ValidationError("Noise channel needs a non-empty name")


@dataclass(frozen=True, eq=False)
class PulseSequence:
    """Ordered items partitioned into gates

    ``gate_boundaries`` holds item indices b_0 = 0 < ... < b_G = len(items);
    gate g consists of items[b_{g-1}:b_g].
    """

    items: Tuple[Item, ...]
    channels: Tuple[NoiseChannel, ...] = ()
    gate_boundaries: Tuple[int, ...] = ()
    gate_labels: Tuple[str, ...] = ()
    label: str = ''

    def __post_init__(self):
        items = tuple(self.items)
        channels = tuple(self.channels)
        if not any(isinstance(item, Segment) for item in items):
            raise ValidationError("Pulse sequence needs at least one segment")

        dims = {item.dimension for item in items}
        if len(dims) != 1:
            raise ValidationError(f"Items have inconsistent dimensions {sorted(dims)}")

        names = [channel.name for channel in channels]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ValidationError(f"Duplicate noise channel identifiers {duplicates}")
        for position, item in enumerate(items):
            if isinstance(item, Segment) and set(item.noise_operators) != set(names):
                missing = sorted(set(names) - set(item.noise_operators))
                extra = sorted(set(item.noise_operators) - set(names))
                raise ChannelMismatchError(
                    f"Segment {position} noise operators do not match channels "
                    f"(missing {missing}, unknown {extra})", missing + extra
                )

        boundaries = tuple(int(b) for b in self.gate_boundaries) or (0, len(items))
        if boundaries[0] != 0 or boundaries[-1] != len(items) or len(boundaries) < 2:
            raise ValidationError(f"Gate boundaries must run from 0 to {len(items)}, got {boundaries}")
        if any(b >= c for b, c in zip(boundaries, boundaries[1:])):
            raise ValidationError(f"Gate boundaries must be strictly increasing, got {boundaries}")

        labels = tuple(self.gate_labels) or tuple(f"g{g + 1}" for g in range(len(boundaries) - 1))
        if len(labels) != len(boundaries) - 1:
            raise ValidationError(f"Expected {len(boundaries) - 1} gate labels, got {len(labels)}")

        object.__setattr__(self, 'items', items)
        object.__setattr__(self, 'channels', channels)
        object.__setattr__(self, 'gate_boundaries', boundaries)
        object.__setattr__(self, 'gate_labels', labels)

    @property
    def dimension(self) -> int:
        return self.items[0].dimension

    @property
    def n_gates(self) -> int:
        return len(self.gate_boundaries) - 1

    @property
    def channel_names(self) -> List[str]:
        return [channel.name for channel in self.channels]

    @property
    def segments(self) -> List[Segment]:
        return [item for item in self.items if isinstance(item, Segment)]

    @property
    def spectra(self) -> Dict[str, SpectralDensity]:
        return {channel.name: channel.spectrum for channel in self.channels}

    def total_duration(self) -> float:
        return float(sum(item.duration for item in self.items))

    def item_start_times(self) -> np.ndarray:
        """Start time of every item, plus tau as last entry"""
        durations = [item.duration for item in self.items]
        return np.concatenate([[0.0], np.cumsum(durations)])

    def boundary_times(self) -> np.ndarray:
        """t_0 = 0, ..., t_G = tau"""
        return self.item_start_times()[list(self.gate_boundaries)]

    def gate_items(self, index: int) -> Tuple[Item, ...]:
        return self.items[self.gate_boundaries[index]:self.gate_boundaries[index + 1]]

    def gate(self, index: int) -> 'PulseSequence':
        """Gate ``index`` (0-based) as a stand-alone single-gate sequence"""
        start, stop = self.gate_boundaries[index], self.gate_boundaries[index + 1]
        return PulseSequence(self.items[start:stop], self.channels, (0, stop - start),
                             (self.gate_labels[index],), self.gate_labels[index])

    def gates(self) -> List['PulseSequence']:
        return [self.gate(g) for g in range(self.n_gates)]

    def with_spectra(self, spectra: Mapping[str, SpectralDensity]) -> 'PulseSequence':
        """Same sequence with some channel spectra replaced"""
        unknown = sorted(set(spectra) - set(self.channel_names))
        if unknown:
            raise ChannelMismatchError(f"Unknown channels {unknown}", unknown)
        channels = tuple(NoiseChannel(c.name, spectra.get(c.name, c.spectrum)) for c in self.channels)
        return PulseSequence(self.items, channels, self.gate_boundaries, self.gate_labels, self.label)

    def restricted(self, names: Sequence[str]) -> 'PulseSequence':
        """Same sequence keeping only the given noise channels"""
        unknown = sorted(set(names) - set(self.channel_names))
        if unknown:
            raise ChannelMismatchError(f"Unknown channels {unknown}", unknown)
        items = tuple(
            Segment(item.duration, item.hamiltonian, {n: item.noise_operators[n] for n in names}, item.label)
            if isinstance(item, Segment) else item
            for item in self.items
        )
        channels = tuple(c for c in self.channels if c.name in names)
        return PulseSequence(items, channels, self.gate_boundaries, self.gate_labels, self.label)

    def content_hash(self) -> str:
        """Hash of items and channel names, independent of spectra and labels"""
        return items_hash(self.items, self.channel_names)

    def to_config(self) -> Dict:
        """Inline run-config representation"""
        def matrix(m):
            return {'real': np.real(m).tolist(), 'imag': np.imag(m).tolist()}

        items = []
        for item in self.items:
            if isinstance(item, Segment):
                items.append({'type': 'segment', 'duration': item.duration,
                              'hamiltonian': matrix(item.hamiltonian),
                              'noise_operators': {k: matrix(v) for k, v in item.noise_operators.items()},
                              'label': item.label})
            else:
                items.append({'type': 'gate', 'unitary': matrix(item.unitary), 'label': item.label})
        return {'dimension': self.dimension, 'items': items,
                'gate_boundaries': list(self.gate_boundaries),
                'gate_labels': list(self.gate_labels)}

    def __repr__(self) -> str:
        return (f"PulseSequence(d={self.dimension}, items={len(self.items)}, gates={self.n_gates}, "
                f"channels={self.channel_names}, tau={self.total_duration():g})")


def total_duration(sequence: PulseSequence) -> float:
    return sequence.total_duration()


def items_hash(items: Sequence[Item], channel_names: Sequence[str]) -> str:
    digest = hashlib.sha256()
    digest.update(','.join(channel_names).encode())
    for item in items:
        if isinstance(item, Segment):
            digest.update(b'S')
            digest.update(np.float64(item.duration).tobytes())
            digest.update(np.ascontiguousarray(item.hamiltonian).tobytes())
            for name in channel_names:
                digest.update(np.ascontiguousarray(item.noise_operators[name]).tobytes())
        else:
            digest.update(b'U')
            digest.update(np.ascontiguousarray(item.unitary).tobytes())
    return digest.hexdigest()


def concatenate(sequences: Sequence[Union[PulseSequence, Item]], preserve_boundaries: bool = False,
                gate_labels: Optional[Sequence[str]] = None, label: str = '') -> PulseSequence:
    """Append sequences in order

    By default every input becomes one gate of the result; with
    ``preserve_boundaries`` the gates of the inputs are kept. Bare items
    (e.g. an instantaneous pi pulse) count as one gate each.

    Nested default concatenations differ only in their gate boundaries, so
    the items and the control matrix do not depend on the nesting.
    Boundaries are associative with ``preserve_boundaries``.
    """
    parts = list(sequences)
    sequences = [p for p in parts if isinstance(p, PulseSequence)]
    if not sequences:
        raise ValidationError("Concatenation needs at least one pulse sequence")

    first = sequences[0]
    dims = {p.dimension for p in parts}
    if len(dims) != 1:
        raise ValidationError(f"Sequences have different dimensions {sorted(dims)}")

    reference = set(first.channel_names)
    for seq in sequences[1:]:
        names = set(seq.channel_names)
        if names != reference:
            offending = sorted(names ^ reference)
            raise ChannelMismatchError(f"Noise channels differ between sequences: {offending}", offending)

    items: List[Item] = []
    boundaries = [0]
    labels: List[str] = []
    for position, seq in enumerate(parts):
        offset = len(items)
        if not isinstance(seq, PulseSequence):
            items.append(seq)
            boundaries.append(len(items))
            labels.append(seq.label or f"g{position + 1}")
            continue
        items.extend(seq.items)
        if preserve_boundaries:
            boundaries.extend(offset + b for b in seq.gate_boundaries[1:])
            labels.extend(seq.gate_labels)
        else:
            boundaries.append(len(items))
            labels.append(seq.label or (seq.gate_labels[0] if seq.n_gates == 1 else f"g{position + 1}"))

    if gate_labels is not None:
        labels = list(gate_labels)
    elif len(set(labels)) != len(labels):
        labels = [f"{name}_{g + 1}" for g, name in enumerate(labels)]

    result = PulseSequence(tuple(items), first.channels, tuple(boundaries), tuple(labels), label)
    logger.debug(f"Concatenated {len(sequences)} sequences into {result}")
    return result
