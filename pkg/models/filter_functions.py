#!/usr/bin/env python3
"""
Filter Functions for FFTracer
Generalized, fidelity and correlation filter functions from control matrices.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from models.basis import OperatorBasis
from models.control_matrix import ControlMatrix, GatePart, gate_contributions
from models.spectra import FrequencyGrid

logger = logging.getLogger(__name__)


def generalized_ff(cm: ControlMatrix) -> np.ndarray:
    """F_{alpha,kl}(omega) = conj(B_{alpha k}) B_{alpha l}; shape (channels, d**2, d**2, frequencies)"""
    return cm.values.conj()[:, :, None, :] * cm.values[:, None, :, :]


@dataclass(frozen=True, eq=False)
class FidelityFF:
    values: np.ndarray
    grid: FrequencyGrid
    channels: Tuple[str, ...]

    @property
    def omega(self) -> np.ndarray:
        return self.grid.values

    def total(self) -> np.ndarray:
        """Sum over channels"""
        return self.values.sum(axis=0)


def fidelity_ff(cm: ControlMatrix) -> FidelityFF:
    """F_alpha(omega) = sum_k |B_{alpha k}(omega)|**2"""
    values = (cm.values.real**2 + cm.values.imag**2).sum(axis=1)
    return FidelityFF(values, cm.grid, cm.channels)


@dataclass(frozen=True, eq=False)
class CorrelationFF:
    """F_alpha^(gg')(omega); values shape (channels, G, G, frequencies)

    Hermitian in (g, g'), complex-valued and not positive in general. The
    diagonal holds the gates' own fidelity filter functions and the sum
    over all pairs the sequence's fidelity filter function.
    """

    values: np.ndarray
    grid: FrequencyGrid
    channels: Tuple[str, ...]
    gate_labels: Tuple[str, ...]
    dimension: int

    @property
    def omega(self) -> np.ndarray:
        return self.grid.values

    @property
    def n_gates(self) -> int:
        return self.values.shape[1]

    def total(self) -> np.ndarray:
        """sum_{gg'} F^(gg'), real; shape (channels, frequencies)"""
        return self.values.sum(axis=(1, 2)).real

    def diagonal(self) -> np.ndarray:
        """F^(gg), real; shape (channels, G, frequencies)"""
        return np.einsum('aggw->agw', self.values).real

    def pair(self, g: int, h: int) -> np.ndarray:
        return self.values[:, g, h]


def correlation_ff(parts: Sequence[GatePart], basis: OperatorBasis) -> CorrelationFF:
    """F^(gg') = sum_k conj(C_k^(g)) C_k^(g') with C^(g) the gate's contribution in the sequence frame"""
    contributions = gate_contributions(parts, basis)
    values = np.einsum('gakw,hakw->aghw', contributions.conj(), contributions)
    first = parts[0].control_matrix
    labels = tuple(part.label or f"g{g + 1}" for g, part in enumerate(parts))
    return CorrelationFF(values, first.grid, first.channels, labels, basis.dimension)
