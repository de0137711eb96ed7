"""Shared fixtures: random Hermitian operators and random pulse sequences"""

import numpy as np
import pytest
from scipy.stats import unitary_group

from models.basis import PAULI_MATRICES, pauli_operator
from models.pulse import InstantaneousGate, NoiseChannel, PulseSequence, Segment
from models.spectra import PowerLawSpectrum, WhiteSpectrum


def random_hermitian(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (a + a.conj().T) / 2


def build_random_sequence(rng: np.random.Generator, n_qubits: int = 1, n_segments: int = 3,
                          n_gates: int = 1, spectrum=None, instantaneous: bool = False,
                          channels=('z',)) -> PulseSequence:
    """Random segments (durations in [0.2, 1]) split into n_gates gates

    With ``instantaneous`` a random unitary is inserted after the first segment.
    """
    d = 2**n_qubits
    spectrum = spectrum or WhiteSpectrum(1e-3)
    noise_ops = {
        'z': pauli_operator('Z' * n_qubits),
        'x': pauli_operator('X' + 'I' * (n_qubits - 1)),
    }
    items = []
    for s in range(n_segments):
        ops = {name: noise_ops[name] for name in channels}
        items.append(Segment(rng.uniform(0.2, 1.0), random_hermitian(rng, d, 2.0), ops, f"s{s}"))
        if instantaneous and s == 0:
            items.append(InstantaneousGate(unitary_group.rvs(d, random_state=rng), 'u'))

    n_gates = min(n_gates, len(items))
    cuts = sorted(rng.choice(np.arange(1, len(items)), size=n_gates - 1, replace=False)) if n_gates > 1 else []
    boundaries = (0, *[int(c) for c in cuts], len(items))
    return PulseSequence(tuple(items), tuple(NoiseChannel(name, spectrum) for name in channels), boundaries)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def random_sequence(rng):
    """Factory: random_sequence(n_qubits=1, n_segments=3, n_gates=1, ...)"""
    def factory(**kwargs):
        return build_random_sequence(rng, **kwargs)
    return factory


@pytest.fixture
def one_over_f():
    return PowerLawSpectrum(amplitude=1e-3, exponent=1.0, omega_min=1e-2, omega_max=1e3)


@pytest.fixture
def pauli():
    return PAULI_MATRICES
