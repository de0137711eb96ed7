import numpy as np
import pytest
from scipy import special

from models.basis import build_pauli_basis, transfer_matrix
from models.circuits import fid_sequence, spin_echo_sequence
from models.control_matrix import control_matrix_freq, sequence_control_matrix
from models.exceptions import ChannelMismatchError, ValidationError
from models.filter_functions import correlation_ff
from models.process import (DecayAmplitudes, apply_ideal_gate, correlation_infidelities,
                            decay_amplitudes_freq, decay_amplitudes_time, fidelity, process_map,
                            sequence_correlation_infidelities, sequence_infidelity, spectral_integral)
from models.spectra import FrequencyGrid, WhiteSpectrum


def test_time_and_frequency_domain_agree_for_white_noise_on_the_default_grid(random_sequence):
    basis = build_pauli_basis(1)
    for case in range(20):
        sequence = random_sequence(n_qubits=1, n_segments=2 + case % 3, instantaneous=case % 2 == 1)
        grid = FrequencyGrid.for_duration(sequence.total_duration())
        in_time = decay_amplitudes_time(sequence, basis)
        in_freq = decay_amplitudes_freq(control_matrix_freq(sequence, basis, grid), sequence.spectra)
        scale = np.abs(in_time.values).max()
        np.testing.assert_allclose(in_freq.values, in_time.values, rtol=1e-6, atol=1e-6 * scale)


def test_time_and_frequency_domain_agree_for_band_limited_noise(random_sequence):
    basis = build_pauli_basis(1)
    spectrum = WhiteSpectrum(1e-3, bandwidth=50.0)
    grid = FrequencyGrid.linear(1e-4, 50.0, 50001)
    for _ in range(3):
        sequence = random_sequence(n_qubits=1, n_segments=2, spectrum=spectrum)
        in_time = decay_amplitudes_time(sequence, basis)
        in_freq = decay_amplitudes_freq(control_matrix_freq(sequence, basis, grid), sequence.spectra,
                                        rule='simpson', end_corrections=True)
        scale = np.abs(in_time.values).max()
        np.testing.assert_allclose(in_freq.values, in_time.values, rtol=1e-5, atol=1e-5 * scale)


def test_fid_decay_amplitude_under_white_noise():
    basis = build_pauli_basis(1)
    gammas = decay_amplitudes_time(fid_sequence(2.0, WhiteSpectrum(0.01)), basis)
    expected = np.zeros((4, 4))
    expected[3, 3] = 0.01 * 2 * 2.0
    np.testing.assert_allclose(gammas.values[0], expected, atol=1e-14)
    assert fidelity(gammas).infidelity == pytest.approx(0.04 / 3)


def test_decay_amplitudes_are_symmetric_psd_and_linear_in_the_spectrum(random_sequence, one_over_f):
    basis = build_pauli_basis(2)
    grid = FrequencyGrid.log(1e-4, 1e4, 3000)
    sequence = random_sequence(n_qubits=2, n_segments=3, spectrum=one_over_f, channels=('z', 'x'))
    cm = control_matrix_freq(sequence, basis, grid)
    gammas = decay_amplitudes_freq(cm, sequence.spectra)
    assert gammas.values.shape == (2, 16, 16)
    np.testing.assert_allclose(gammas.values, gammas.values.transpose(0, 2, 1), atol=1e-16)
    assert gammas.psd_defect() > -1e-10

    scaled = decay_amplitudes_freq(cm, {name: s.scaled(7.0) for name, s in sequence.spectra.items()})
    np.testing.assert_allclose(scaled.values, 7.0 * gammas.values, rtol=1e-12, atol=1e-20)


def test_scaling_the_spectra_scales_every_output_linearly(random_sequence, one_over_f):
    basis = build_pauli_basis(1)
    grid = FrequencyGrid.log(1e-4, 1e4, 3000)
    sequence = random_sequence(n_qubits=1, n_segments=4, n_gates=3, spectrum=one_over_f, channels=('z', 'x'))
    scaled_spectra = {name: s.scaled(7.0) for name, s in sequence.spectra.items()}
    cm = sequence_control_matrix(sequence, basis, grid)
    cff = correlation_ff(cm.parts, basis)

    gammas = decay_amplitudes_freq(cm, sequence.spectra)
    scaled_gammas = decay_amplitudes_freq(cm, scaled_spectra)
    np.testing.assert_allclose(scaled_gammas.values, 7.0 * gammas.values, rtol=1e-12, atol=1e-20)

    infidelity = fidelity(gammas)
    scaled_infidelity = fidelity(scaled_gammas)
    assert scaled_infidelity.infidelity == pytest.approx(7.0 * infidelity.infidelity, rel=1e-12)
    for name, value in infidelity.per_channel.items():
        assert scaled_infidelity.per_channel[name] == pytest.approx(7.0 * value, rel=1e-12)

    matrix = correlation_infidelities(cff, sequence.spectra)
    scaled_matrix = correlation_infidelities(cff, scaled_spectra)
    scale = np.abs(matrix.values).max()
    np.testing.assert_allclose(scaled_matrix.values, 7.0 * matrix.values, rtol=1e-12, atol=1e-12 * scale)
    np.testing.assert_allclose(scaled_matrix.per_channel, 7.0 * matrix.per_channel,
                               rtol=1e-12, atol=1e-12 * scale)


def test_missing_spectrum_and_unknown_rule_are_rejected(random_sequence):
    basis = build_pauli_basis(1)
    sequence = random_sequence(n_qubits=1)
    cm = control_matrix_freq(sequence, basis, FrequencyGrid.log(1e-2, 1e2, 50))
    with pytest.raises(ChannelMismatchError):
        decay_amplitudes_freq(cm, {})
    with pytest.raises(ValidationError):
        decay_amplitudes_freq(cm, sequence.spectra, rule='romberg')


def test_end_corrections_cover_the_white_noise_tail():
    omega = np.geomspace(1e-3, 1e2, 500)
    values = 1.0 / omega**2
    spectrum = WhiteSpectrum(1.0)
    plain, tail = spectral_integral(values, spectrum, omega, end_corrections=False)
    corrected, _ = spectral_integral(values, spectrum, omega, end_corrections=True)
    assert tail == pytest.approx(1.0 / (1e2 * np.pi), rel=1e-12)
    assert corrected - plain == pytest.approx(tail + 1e-3 * 1e6 / np.pi, rel=1e-12)


def test_tail_estimate_follows_the_subleading_decay():
    omega = np.linspace(0.5, 100.0, 2000)
    values = (1.0 + 3.0 / omega) / omega**2
    _, tail = spectral_integral(values, WhiteSpectrum(1.0), omega)
    assert tail * np.pi == pytest.approx(1.0 / 100.0 + 3.0 / (2 * 100.0**2), rel=1e-10)


def test_tail_estimate_averages_out_oscillations():
    cutoff = 1000.0
    omega = np.linspace(0.1, cutoff, 10000)
    values = 8 * np.sin(omega / 2)**2 / omega**2
    _, tail = spectral_integral(values, WhiteSpectrum(1.0), omega)
    si, _ = special.sici(cutoff)
    exact = 4.0 / cutoff - 4.0 * (np.cos(cutoff) / cutoff - np.pi / 2 + si)
    assert tail * np.pi == pytest.approx(exact, abs=4.5 / cutoff**2)


@pytest.mark.parametrize('n_qubits', [1, 2])
def test_process_map_is_trace_preserving_and_nearly_completely_positive(random_sequence, n_qubits):
    basis = build_pauli_basis(n_qubits)
    grid = FrequencyGrid.log(1e-4, 1e4, 2000)
    for _ in range(10):
        sequence = random_sequence(n_qubits=n_qubits, n_segments=3, spectrum=WhiteSpectrum(1e-3))
        gammas = decay_amplitudes_freq(control_matrix_freq(sequence, basis, grid), sequence.spectra,
                                       end_corrections=True)
        process = process_map(gammas, basis)
        assert process.trace_preservation_defect() < 1e-10
        assert np.isrealobj(process.matrix)
        eigenvalues = process.choi_eigenvalues()
        assert eigenvalues.min() > -1e-3 * eigenvalues.max()
        assert np.trace(process.choi()).real == pytest.approx(1.0)


def test_average_gate_fidelity_matches_decay_amplitude_trace(random_sequence):
    basis = build_pauli_basis(2)
    grid = FrequencyGrid.log(1e-4, 1e4, 2000)
    sequence = random_sequence(n_qubits=2, n_segments=3)
    gammas = decay_amplitudes_freq(control_matrix_freq(sequence, basis, grid), sequence.spectra)
    process = process_map(gammas, basis)
    assert process.average_gate_fidelity() == pytest.approx(fidelity(gammas).fidelity, rel=1e-12)


def test_fidelity_from_trace():
    gammas = DecayAmplitudes(np.diag([0.0, 0.01, 0.01, 0.01])[None], ('z',), ('I', 'X', 'Y', 'Z'))
    result = fidelity(gammas)
    assert result.infidelity == pytest.approx(0.01)
    assert result.fidelity == pytest.approx(0.99)
    assert result.per_channel == {'z': pytest.approx(0.01)}


def test_dephasing_process_map(pauli):
    basis = build_pauli_basis(1)
    gammas = DecayAmplitudes(np.diag([0.0, 0.0, 0.0, 0.02])[None], ('z',), basis.labels)
    process = process_map(gammas, basis)
    np.testing.assert_allclose(process.matrix, np.diag([1.0, 0.98, 0.98, 1.0]), atol=1e-15)
    rho = np.array([[0.5, 0.5], [0.5, 0.5]])
    np.testing.assert_allclose(process.apply(rho), [[0.5, 0.49], [0.49, 0.5]], atol=1e-15)


def test_apply_ideal_gate(pauli):
    basis = build_pauli_basis(1)
    silent = process_map(DecayAmplitudes(np.zeros((1, 4, 4)), ('z',), basis.labels), basis)
    hadamard = (pauli['X'] + pauli['Z']) / np.sqrt(2)
    composed = apply_ideal_gate(silent, hadamard)
    np.testing.assert_allclose(composed.matrix, transfer_matrix(hadamard, basis), atol=1e-15)
    assert composed.average_gate_fidelity() == pytest.approx(1 / 3)


def test_basis_mismatch_is_rejected():
    gammas = DecayAmplitudes(np.zeros((1, 4, 4)), ('z',), ('I', 'X', 'Y', 'Z'))
    with pytest.raises(ValidationError):
        process_map(gammas, build_pauli_basis(2))


def test_correlation_infidelities_sum_to_the_infidelity(random_sequence, one_over_f):
    grid = FrequencyGrid.log(1e-4, 1e4, 3000)
    for case in range(20):
        n_qubits, n_gates = 1 + case % 2, 1 + case % 5
        basis = build_pauli_basis(n_qubits)
        sequence = random_sequence(n_qubits=n_qubits, n_segments=5, n_gates=n_gates, spectrum=one_over_f,
                                   instantaneous=case % 3 == 0, channels=('z', 'x'))
        matrix = sequence_correlation_infidelities(sequence, grid, basis)
        total = sequence_infidelity(sequence, grid, basis).infidelity

        assert matrix.values.shape == (sequence.n_gates, sequence.n_gates)
        assert matrix.total() == pytest.approx(total, rel=1e-9)
        np.testing.assert_allclose(matrix.values, matrix.values.T, atol=1e-15 * total)
        np.testing.assert_allclose(matrix.per_channel.sum(axis=0), matrix.values)
        assert np.linalg.eigvalsh(matrix.values).min() > -1e-10 * np.trace(matrix.values)
        np.testing.assert_allclose(matrix.row_sums().sum(), total, rtol=1e-9)


def test_spin_echo_correlation_infidelities(one_over_f):
    basis = build_pauli_basis(1)
    grid = FrequencyGrid.log(1e-4, 1e4, 4000)
    sequence = spin_echo_sequence(1.0, one_over_f)
    cm = sequence_control_matrix(sequence, basis, grid)
    matrix = correlation_infidelities(correlation_ff(cm.parts, basis), sequence.spectra)
    assert matrix.gate_labels == ('idle_1', 'pi_x', 'idle_2')
    # the two idle periods cancel each other's low-frequency noise
    assert matrix.values[0, 2] < 0
    assert matrix.values[0, 2] == pytest.approx(matrix.values[2, 0])
    assert matrix.diagonal()[1] == 0
    assert matrix.total() < matrix.diagonal().sum()
    single = sequence_infidelity(sequence.gate(0), grid, basis).infidelity
    assert matrix.diagonal()[0] == pytest.approx(single, rel=1e-9)
