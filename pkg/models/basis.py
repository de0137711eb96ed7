#!/usr/bin/env python3
"""
Operator Basis for FFTracer
Normalized n-qubit Pauli basis used for every expansion in the engine.

All downstream formulas assume tr(sigma_k sigma_l) = delta_kl, so each Pauli
string carries a factor 1/sqrt(d). The filter-function literature often works
with unnormalized Paulis; values here differ from those by powers of d.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from models.exceptions import CapacityError, ValidationError

logger = logging.getLogger(__name__)

MAX_QUBITS = 5
PAULI_SYMBOLS = 'IXYZ'

PAULI_MATRICES = {
    'I': np.eye(2, dtype=complex),
    'X': np.array([[0, 1], [1, 0]], dtype=complex),
    'Y': np.array([[0, -1j], [1j, 0]], dtype=complex),
    'Z': np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, e.g. 'XIZ'"""

    labels: str

    def __post_init__(self):
        if len(self.labels) < 1:
            raise ValidationError("Pauli string needs at least one label")
        bad = [s for s in self.labels if s not in PAULI_SYMBOLS]
        if bad:
            raise ValidationError(f"Unknown Pauli symbols {bad} in '{self.labels}'")

    @property
    def n_qubits(self) -> int:
        return len(self.labels)

    def matrix(self) -> np.ndarray:
        """Unnormalized matrix of the string (qubit 0 is the leftmost factor)"""
        result = np.ones((1, 1), dtype=complex)
        for symbol in self.labels:
            result = np.kron(result, PAULI_MATRICES[symbol])
        return result


def pauli_operator(labels: str) -> np.ndarray:
    """Shortcut for PauliString(labels).matrix()"""
    return PauliString(labels).matrix()


def embed(operator: np.ndarray, qubits: Sequence[int], n_qubits: int) -> np.ndarray:
    """Embed an operator on adjacent ``qubits`` into an n-qubit register"""
    qubits = list(qubits)
    if qubits != list(range(qubits[0], qubits[0] + len(qubits))):
        raise ValidationError(f"Qubits {qubits} are not adjacent")
    if qubits[0] < 0 or qubits[-1] >= n_qubits:
        raise ValidationError(f"Qubits {qubits} outside register of {n_qubits}")
    left = np.eye(2**qubits[0], dtype=complex)
    right = np.eye(2**(n_qubits - qubits[-1] - 1), dtype=complex)
    return np.kron(np.kron(left, operator), right)


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    """Orthonormal Hermitian basis {sigma_k}, element 0 the scaled identity"""

    elements: np.ndarray
    labels: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        elements = np.asarray(self.elements, dtype=complex)
        if elements.ndim != 3 or elements.shape[1] != elements.shape[2]:
            raise ValidationError(f"Basis elements must have shape (d**2, d, d), got {elements.shape}")
        if elements.shape[0] != elements.shape[1]**2:
            raise ValidationError("A complete basis has d**2 elements")
        elements.setflags(write=False)
        object.__setattr__(self, 'elements', elements)
        if not self.labels:
            object.__setattr__(self, 'labels', tuple(str(k) for k in range(len(elements))))

    @property
    def dimension(self) -> int:
        return self.elements.shape[1]

    @property
    def size(self) -> int:
        return self.elements.shape[0]

    @property
    def n_qubits(self) -> int:
        return int(round(np.log2(self.dimension)))

    def index(self, label: str) -> int:
        """Position of a Pauli label such as 'XZ'"""
        return self.labels.index(label)

    def gram(self) -> np.ndarray:
        """Matrix of tr(sigma_k sigma_l)"""
        return np.einsum('kij,lji->kl', self.elements, self.elements)

    def expand(self, operator: np.ndarray) -> np.ndarray:
        return expand(operator, self)

    def reconstruct(self, coefficients: np.ndarray) -> np.ndarray:
        """Sum_k c_k sigma_k; works on trailing batch axes of the coefficients too"""
        return np.tensordot(coefficients, self.elements, axes=([-1], [0]))


def build_pauli_basis(n_qubits: int) -> OperatorBasis:
    """Pauli strings / sqrt(d), lexicographic in (I, X, Y, Z), all-I first"""
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise CapacityError(f"Pauli basis supports 1..{MAX_QUBITS} qubits, got {n_qubits}")

    d = 2**n_qubits
    labels = [''.join(p) for p in itertools.product(PAULI_SYMBOLS, repeat=n_qubits)]
    elements = np.array([pauli_operator(label) for label in labels]) / np.sqrt(d)
    logger.debug("Built %d-qubit Pauli basis with %d elements", n_qubits, len(labels))
    return OperatorBasis(elements, tuple(labels))


def hermiticity_defect(operator: np.ndarray) -> float:
    """Frobenius norm of the anti-Hermitian part"""
    operator = np.asarray(operator)
    return float(np.linalg.norm(operator - operator.conj().T) / 2)


def expand(operator: np.ndarray, basis: OperatorBasis, atol: float = 1e-10) -> np.ndarray:
    """Real coefficients c_k = tr(operator sigma_k)"""
    operator = np.asarray(operator, dtype=complex)
    if operator.shape != (basis.dimension, basis.dimension):
        raise ValidationError(
            f"Operator shape {operator.shape} does not match basis dimension {basis.dimension}"
        )
    defect = hermiticity_defect(operator)
    if defect > atol:
        raise ValidationError(f"Operator is not Hermitian: anti-Hermitian norm {defect:.3e}")

    coefficients = np.einsum('ij,kji->k', operator, basis.elements)
    return coefficients.real


def pauli_labels(n_qubits: int) -> List[str]:
    return [''.join(p) for p in itertools.product(PAULI_SYMBOLS, repeat=n_qubits)]


def transfer_matrix(unitary: np.ndarray, basis: OperatorBasis) -> np.ndarray:
    """Real matrix T_kl = tr(sigma_k U sigma_l U^dagger) of rho -> U rho U^dagger

    Batched over leading axes of ``unitary``.
    """
    unitary = np.asarray(unitary, dtype=complex)
    rotated = unitary[..., None, :, :] @ basis.elements @ np.conj(np.swapaxes(unitary, -1, -2))[..., None, :, :]
    return np.einsum('kij,...lji->...kl', basis.elements, rotated).real
