import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss
from scipy.linalg import expm

from models.basis import build_pauli_basis, expand
from models.circuits import fid_sequence, spin_echo_sequence
from models.control_matrix import (GateCache, GatePart, concatenate_control_matrices, control_matrix_freq,
                                   control_matrix_time, gate_parts, sequence_control_matrix)
from models.exceptions import FrameMismatchError, TimeRangeError
from models.pulse import InstantaneousGate
from models.spectra import FrequencyGrid
from utils.result_writer import load_control_matrix, save_control_matrix


def toggling_frame_coefficients(sequence, basis, t):
    """expand(U(t)^dag B U(t)) by brute force"""
    U = np.eye(sequence.dimension, dtype=complex)
    elapsed = 0.0
    operator = None
    for item in sequence.items:
        if isinstance(item, InstantaneousGate):
            U = item.unitary @ U
            continue
        if t <= elapsed + item.duration:
            U = expm(-1j * item.hamiltonian * (t - elapsed)) @ U
            operator = item.noise_operators['z']
            break
        U = expm(-1j * item.hamiltonian * item.duration) @ U
        elapsed += item.duration
    return expand(U.conj().T @ operator @ U, basis)


def test_fid_control_matrix_closed_form():
    basis = build_pauli_basis(1)
    grid = FrequencyGrid.log(1e-3, 1e2, 200)
    cm = control_matrix_freq(fid_sequence(1.0), basis, grid)
    w = grid.values
    expected = np.sqrt(2) * (np.exp(1j * w) - 1) / (1j * w)
    np.testing.assert_allclose(cm.channel('z')[basis.index('Z')], expected, rtol=1e-10)
    np.testing.assert_allclose(np.delete(cm.values[0], basis.index('Z'), axis=0), 0, atol=1e-14)


def test_time_domain_matches_brute_force(random_sequence):
    sequence = random_sequence(n_qubits=1, n_segments=3, instantaneous=True)
    basis = build_pauli_basis(1)
    for t in np.linspace(0.01, sequence.total_duration() - 0.01, 7):
        np.testing.assert_allclose(control_matrix_time(sequence, basis, t)[0],
                                   toggling_frame_coefficients(sequence, basis, t), atol=1e-10)


def test_time_outside_sequence_raises():
    basis = build_pauli_basis(1)
    sequence = fid_sequence(1.0)
    with pytest.raises(TimeRangeError):
        control_matrix_time(sequence, basis, -0.1)
    with pytest.raises(TimeRangeError):
        control_matrix_time(sequence, basis, 1.5)
    np.testing.assert_allclose(control_matrix_time(sequence, basis, 1.0)[0], [0, 0, 0, np.sqrt(2)], atol=1e-14)


def test_boundary_uses_frame_after_instantaneous_gate():
    basis = build_pauli_basis(1)
    sequence = spin_echo_sequence(1.0)
    # after the pi_x pulse Z toggles to -Z
    np.testing.assert_allclose(control_matrix_time(sequence, basis, 1.0)[0], [0, 0, 0, -np.sqrt(2)], atol=1e-12)


def test_frequency_domain_is_fourier_transform_of_time_domain(random_sequence):
    sequence = random_sequence(n_qubits=2, n_segments=3)
    basis = build_pauli_basis(2)
    grid = FrequencyGrid(np.array([0.3, 1.7, 4.2]))
    cm = control_matrix_freq(sequence, basis, grid)

    nodes, weights = leggauss(80)
    expected = np.zeros((16, 3), dtype=complex)
    start = 0.0
    for segment in sequence.segments:
        times = start + (nodes + 1) * segment.duration / 2
        for t, weight in zip(times, weights * segment.duration / 2):
            b = control_matrix_time(sequence, basis, t)[0]
            expected += weight * np.outer(b, np.exp(1j * grid.values * t))
        start += segment.duration
    np.testing.assert_allclose(cm.values[0], expected, atol=1e-9)


@pytest.mark.parametrize('n_qubits, n_gates', [(1, 2), (1, 5), (2, 3), (2, 4)])
def test_gatewise_assembly_matches_direct(random_sequence, n_qubits, n_gates):
    sequence = random_sequence(n_qubits=n_qubits, n_segments=4, n_gates=n_gates, instantaneous=True,
                               channels=('z', 'x'))
    basis = build_pauli_basis(n_qubits)
    grid = FrequencyGrid.log(1e-2, 1e2, 300)
    direct = control_matrix_freq(sequence, basis, grid)
    assembled = sequence_control_matrix(sequence, basis, grid)
    assert len(assembled.parts) == sequence.n_gates
    scale = np.abs(direct.values).max()
    np.testing.assert_allclose(assembled.values, direct.values, atol=1e-9 * scale)
    np.testing.assert_allclose(assembled.total_propagator, direct.total_propagator, atol=1e-10)


def test_gate_cache_reuses_identical_gates():
    basis = build_pauli_basis(1)
    grid = FrequencyGrid.log(1e-2, 1e2, 100)
    cache = GateCache()
    sequence_control_matrix(spin_echo_sequence(1.0), basis, grid, cache)
    assert cache.misses == 2
    assert cache.hits == 1
    sequence_control_matrix(spin_echo_sequence(1.0), basis, grid, cache)
    assert cache.hits == 4


def test_inconsistent_parts_are_rejected():
    basis = build_pauli_basis(1)
    grid = FrequencyGrid.log(1e-2, 1e2, 50)
    parts = gate_parts(spin_echo_sequence(1.0), basis, grid)
    shifted = [parts[0], parts[1], GatePart(parts[2].control_matrix, parts[2].frame, 5.0, parts[2].label)]
    with pytest.raises(FrameMismatchError):
        concatenate_control_matrices(shifted, basis)
    wrong_frame = [parts[0], parts[1], GatePart(parts[2].control_matrix, np.eye(2), 1.0, parts[2].label)]
    with pytest.raises(FrameMismatchError):
        concatenate_control_matrices(wrong_frame, basis)
    other_grid = gate_parts(spin_echo_sequence(1.0), basis, FrequencyGrid.log(1e-2, 1e2, 60))
    with pytest.raises(FrameMismatchError):
        concatenate_control_matrices([parts[0], other_grid[1], parts[2]], basis)


def test_npz_dump_round_trip(tmp_path):
    basis = build_pauli_basis(1)
    cm = control_matrix_freq(spin_echo_sequence(1.0), basis, FrequencyGrid.log(1e-2, 1e2, 50))
    path = tmp_path / 'cm.npz'
    save_control_matrix(cm, path)
    loaded = load_control_matrix(path)
    np.testing.assert_array_equal(loaded.values, cm.values)
    np.testing.assert_array_equal(loaded.omega, cm.omega)
    assert loaded.channels == cm.channels
    assert loaded.basis_labels == cm.basis_labels
    assert loaded.duration == cm.duration
