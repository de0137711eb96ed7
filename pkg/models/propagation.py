#!/usr/bin/env python3
"""
Propagation for FFTracer
Segment eigensystems, segment propagators and cumulative propagators Q_g.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from models.exceptions import PropagationError
from models.pulse import InstantaneousGate, Item, PulseSequence, Segment

logger = logging.getLogger(__name__)

EIGEN_TOL = 1e-10
UNITARY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SegmentEigensystem:
    """H = V diag(eigenvalues) V^dagger"""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def propagator(self, t: float) -> np.ndarray:
        """exp(-i H t)"""
        V = self.eigenvectors
        return (V * np.exp(-1j * self.eigenvalues * t)) @ V.conj().T


def diagonalize(hamiltonian: np.ndarray) -> SegmentEigensystem:
    """Hermitian eigendecomposition with a reconstruction check"""
    try:
        eigenvalues, eigenvectors = linalg.eigh(hamiltonian)
    except (linalg.LinAlgError, ValueError) as e:
        raise PropagationError(f"Eigendecomposition failed: {e}")

    scale = max(1.0, float(np.linalg.norm(hamiltonian)))
    residual = float(np.linalg.norm(
        (eigenvectors * eigenvalues) @ eigenvectors.conj().T - hamiltonian
    ))
    if residual > EIGEN_TOL * scale:
        raise PropagationError(f"Eigendecomposition residual {residual:.3e} too large", residual)
    return SegmentEigensystem(eigenvalues, eigenvectors)


def segment_propagator(segment: Segment) -> np.ndarray:
    return diagonalize(segment.hamiltonian).propagator(segment.duration)


@dataclass(frozen=True, eq=False)
class PropagatorSet:
    """Per-item propagators P and cumulative Q (Q[0] = identity, Q[i+1] = P[i] Q[i])"""

    propagators: Tuple[np.ndarray, ...]
    cumulative: Tuple[np.ndarray, ...]
    eigensystems: Tuple[Optional[SegmentEigensystem], ...]
    start_times: np.ndarray
    boundary_times: np.ndarray
    gate_boundaries: Tuple[int, ...]

    @property
    def total(self) -> np.ndarray:
        """Q_G, the full control operation"""
        return self.cumulative[-1]

    def gate_frames(self) -> List[np.ndarray]:
        """Q_{g-1} at the start of every gate"""
        return [self.cumulative[b] for b in self.gate_boundaries[:-1]]

    def gate_propagators(self) -> List[np.ndarray]:
        """Q_g at the end of every gate"""
        return [self.cumulative[b] for b in self.gate_boundaries[1:]]


def item_propagators(items: Sequence[Item]) -> Tuple[List[np.ndarray], List[Optional[SegmentEigensystem]]]:
    propagators, eigensystems = [], []
    for item in items:
        if isinstance(item, InstantaneousGate):
            propagators.append(np.asarray(item.unitary))
            eigensystems.append(None)
        else:
            eig = diagonalize(item.hamiltonian)
            propagators.append(eig.propagator(item.duration))
            eigensystems.append(eig)
    return propagators, eigensystems


def cumulative_from_items(items: Sequence[Item], dimension: int) -> Tuple[List[np.ndarray], List[np.ndarray], List]:
    propagators, eigensystems = item_propagators(items)
    cumulative = [np.eye(dimension, dtype=complex)]
    for P in propagators:
        cumulative.append(P @ cumulative[-1])

    identity = np.eye(dimension)
    for position, Q in enumerate(cumulative):
        defect = float(np.linalg.norm(Q.conj().T @ Q - identity))
        if defect > UNITARY_TOL:
            raise PropagationError(f"Cumulative propagator {position} not unitary", defect)
    return propagators, cumulative, eigensystems


def cumulative_propagators(sequence: PulseSequence) -> PropagatorSet:
    propagators, cumulative, eigensystems = cumulative_from_items(sequence.items, sequence.dimension)
    logger.debug(f"Propagated {len(propagators)} items of {sequence}")
    return PropagatorSet(tuple(propagators), tuple(cumulative), tuple(eigensystems),
                         sequence.item_start_times(), sequence.boundary_times(),
                         sequence.gate_boundaries)


def total_propagator(sequence: PulseSequence) -> np.ndarray:
    return cumulative_propagators(sequence).total
