#!/usr/bin/env python3
"""
Process for FFTracer
Decay amplitudes, the first-order averaged process, fidelities and
correlation infidelities.

Spectral integrals run over omega > 0 only: since B(-omega) = conj(B(omega))
and S is even, (1/2pi) int_R S F domega = (1/pi) int_0^inf S Re(F) domega.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from models.basis import OperatorBasis, build_pauli_basis, expand, transfer_matrix
from models.control_matrix import (ControlMatrix, GateCache, control_matrix_freq,
                                   segment_time_function, sequence_control_matrix)
from models.exceptions import ChannelMismatchError, ValidationError
from models.filter_functions import CorrelationFF, correlation_ff
from models.propagation import cumulative_propagators
from models.pulse import PulseSequence, Segment
from models.spectra import FrequencyGrid, SpectralDensity, WhiteSpectrum, autocorrelation

logger = logging.getLogger(__name__)

QUADRATURE_RULES = ('trapezoid', 'simpson')
DEFAULT_RULE = 'simpson'
DEFAULT_END_CORRECTIONS = True
# pair rows per block are chosen so a block holds about this many grid values
PAIR_BLOCK_VALUES = 2**24


def _asymptote_projector(omega: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Window of the top of the grid and the weighted least-squares projector for
    omega**2 F(omega) ~ a0 + a1 * (omega_max / omega) on that window

    A Hann taper keeps oscillating parts of the filter function from leaking
    into the fitted coefficients.
    """
    window = np.flatnonzero(omega >= omega[-1] / 2)
    if len(window) < 8:
        window = np.arange(max(0, len(omega) - 8), len(omega))
    top = omega[window]
    if len(top) < 3:
        return window, np.full((1, len(top)), 1.0 / len(top))
    design = np.stack([np.ones_like(top), omega[-1] / top], axis=1)
    if len(top) >= 8:
        weights = np.sin(np.pi * (top - top[0]) / (top[-1] - top[0]))**2
    else:
        weights = np.ones_like(top)
    weighted = design * weights[:, None]
    return window, np.linalg.solve(design.T @ weighted, weighted.T)


def spectral_integral(values: np.ndarray, spectrum: SpectralDensity, omega: np.ndarray,
                      rule: str = DEFAULT_RULE,
                      end_corrections: bool = DEFAULT_END_CORRECTIONS) -> Tuple[np.ndarray, np.ndarray]:
    """(1/pi) int_0^inf S(omega) F(omega) domega over the last axis of real ``values``

    Returns the integral and the estimated contribution above the grid. With
    ``end_corrections`` the interval below the first grid point (S F taken
    constant) and that tail are added. The tail uses the asymptotics of
    piecewise-constant sequences, omega**2 F -> a0 + a1 / omega, fitted on the
    top half of the grid and integrated against the spectrum exactly.
    """
    if rule not in QUADRATURE_RULES:
        raise ValidationError(f"Unknown quadrature rule '{rule}', expected one of {QUADRATURE_RULES}")
    density = spectrum.evaluate(omega)
    integrand = density * values
    if rule == 'simpson':
        body = integrate.simpson(integrand, x=omega, axis=-1)
    else:
        body = integrate.trapezoid(integrand, x=omega, axis=-1)

    window, projector = _asymptote_projector(omega)
    coefficients = (omega[window]**2 * values[..., window]) @ projector.T
    omega_c = omega[-1]
    tail = coefficients[..., 0] * spectrum.tail_integral(omega_c)
    if projector.shape[0] > 1:
        tail = tail + coefficients[..., 1] * omega_c * spectrum.tail_integral(omega_c, power=3.0)

    if end_corrections:
        body = body + omega[0] * integrand[..., 0] + tail
    return body / np.pi, tail / np.pi


@dataclass(frozen=True, eq=False)
class DecayAmplitudes:
    """Gamma_alpha, real symmetric; values shape (channels, d**2, d**2)"""

    values: np.ndarray
    channels: Tuple[str, ...]
    basis_labels: Tuple[str, ...]
    tail_share: Dict[str, float] = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return int(round(np.sqrt(self.values.shape[-1])))

    def total(self) -> np.ndarray:
        return self.values.sum(axis=0)

    def channel(self, name: str) -> np.ndarray:
        return self.values[self.channels.index(name)]

    def psd_defect(self) -> float:
        """Most negative eigenvalue relative to the trace, over channels (0 if PSD)"""
        worst = 0.0
        for gamma in self.values:
            trace = np.trace(gamma)
            if trace <= 0:
                continue
            worst = min(worst, float(np.linalg.eigvalsh(gamma)[0] / trace))
        return worst

    def scaled(self, factor: float) -> 'DecayAmplitudes':
        return DecayAmplitudes(self.values * factor, self.channels, self.basis_labels, dict(self.tail_share))


def _resolve_spectra(channels: Sequence[str], spectra: Mapping[str, SpectralDensity]) -> Dict[str, SpectralDensity]:
    missing = [name for name in channels if name not in spectra]
    if missing:
        raise ChannelMismatchError(f"No spectrum for channels {missing}", missing)
    return {name: spectra[name] for name in channels}


def _pair_integrals(coefficients: np.ndarray, spectrum: SpectralDensity, omega: np.ndarray,
                    rule: str, end_corrections: bool) -> Tuple[np.ndarray, np.ndarray]:
    """Gamma_kl and tail estimate for one channel from B_k(omega), upper triangle in blocks"""
    n = coefficients.shape[0]
    gamma = np.zeros((n, n))
    tail = np.zeros((n, n))
    active = np.flatnonzero(np.abs(coefficients).max(axis=-1) > 0)
    rows, cols = np.triu_indices(len(active))
    block = max(1, PAIR_BLOCK_VALUES // len(omega))
    for lo in range(0, len(rows), block):
        k = active[rows[lo:lo + block]]
        l = active[cols[lo:lo + block]]
        ff = (coefficients[k].conj() * coefficients[l]).real
        value, estimate = spectral_integral(ff, spectrum, omega, rule, end_corrections)
        gamma[k, l] = value
        gamma[l, k] = value
        tail[k, l] = estimate
        tail[l, k] = estimate
    return gamma, tail


def decay_amplitudes_freq(cm: ControlMatrix, spectra: Mapping[str, SpectralDensity],
                          rule: str = DEFAULT_RULE, end_corrections: bool = DEFAULT_END_CORRECTIONS,
                          coverage_tolerance: float = 1e-3) -> DecayAmplitudes:
    """Gamma_{alpha,kl} = (1/pi) int_0^inf S_alpha Re(conj(B_k) B_l) domega"""
    spectra = _resolve_spectra(cm.channels, spectra)
    values, shares = [], {}
    for a, name in enumerate(cm.channels):
        gamma, tail = _pair_integrals(cm.values[a], spectra[name], cm.omega, rule, end_corrections)
        trace = np.trace(gamma)
        share = float(abs(np.trace(tail)) / trace) if trace > 0 else 0.0
        shares[name] = share
        if share > coverage_tolerance:
            logger.warning(
                f"Channel '{name}': estimated {share:.2%} of the decay amplitude lies above "
                f"omega = {cm.grid.omega_max:.3g}; extend the grid"
                + ("" if end_corrections else " or enable end corrections")
            )
        values.append(gamma)
    n_basis = len(cm.basis_labels)
    return DecayAmplitudes(np.array(values).reshape(len(cm.channels), n_basis, n_basis),
                           cm.channels, cm.basis_labels, shares)


def decay_amplitudes_time(sequence: PulseSequence, basis: OperatorBasis,
                          spectra: Optional[Mapping[str, SpectralDensity]] = None,
                          order: int = 48, epsrel: float = 1e-12) -> DecayAmplitudes:
    """Gamma_{alpha,kl} = int int <b(t1) b(t2)> B_k(t1) B_l(t2) dt1 dt2

    Delta-correlated (unbounded white) channels reduce to S0 int B_k B_l dt,
    integrated per segment with adaptive quadrature. Other channels use
    Gauss-Legendre nodes per segment and the autocorrelation of the spectrum.
    """
    spectra = _resolve_spectra(sequence.channel_names, spectra or sequence.spectra)
    propagators = cumulative_propagators(sequence)
    positions = [i for i, item in enumerate(sequence.items) if isinstance(item, Segment)]
    coefficients = {i: segment_time_function(sequence, basis, i, propagators) for i in positions}
    n_basis = len(basis.elements)
    tau = sequence.total_duration()

    nodes, weights = leggauss(order)
    values = []
    for a, name in enumerate(sequence.channel_names):
        spectrum = spectra[name]
        if isinstance(spectrum, WhiteSpectrum) and spectrum.is_delta_correlated:
            gamma = np.zeros((n_basis, n_basis))
            for i in positions:
                def outer(t, i=i):
                    b = coefficients[i](t)[0, a]
                    return np.outer(b, b)
                result, _ = integrate.quad_vec(outer, 0.0, sequence.items[i].duration,
                                               epsrel=epsrel, epsabs=0)
                gamma += result
            values.append(spectrum.s0 * gamma)
            continue

        times, samples = [], []
        for i in positions:
            duration = sequence.items[i].duration
            local = (nodes + 1) * duration / 2
            times.append(propagators.start_times[i] + local)
            samples.append(weights[:, None] * duration / 2 * coefficients[i](local)[:, a])
        times = np.concatenate(times)
        samples = np.concatenate(samples)
        correlation = autocorrelation(spectrum, max_lag=tau)
        kernel = correlation(times[:, None] - times[None, :])
        gamma = samples.T @ kernel @ samples
        values.append((gamma + gamma.T) / 2)

    return DecayAmplitudes(np.array(values).reshape(len(sequence.channels), n_basis, n_basis),
                           tuple(sequence.channel_names), basis.labels)


@dataclass(frozen=True, eq=False)
class ProcessMap:
    """Transfer matrix T of the averaged error process (up to a unitary rotation)"""

    matrix: np.ndarray
    basis: OperatorBasis

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return self.basis.reconstruct(self.matrix @ expand(rho, self.basis))

    def trace_preservation_defect(self) -> float:
        """Deviation of the identity row from (1, 0, ..., 0)"""
        row = self.matrix[0].copy()
        row[0] -= 1
        return float(np.abs(row).max())

    def choi(self) -> np.ndarray:
        return choi_matrix(self.matrix, self.basis)

    def choi_eigenvalues(self) -> np.ndarray:
        return choi_eigenvalues(self.matrix, self.basis)

    def average_gate_fidelity(self) -> float:
        return average_gate_fidelity(self.matrix, self.dimension)


def _dissipator_transfer(gamma: np.ndarray, basis: OperatorBasis) -> np.ndarray:
    """Transfer matrix of rho -> sum_kl Gamma_kl (s_k rho s_l - {s_k s_l, rho}/2)

    Gamma is split into Hermitian jump operators L_m = sum_k v_mk s_k from its
    eigendecomposition; zero modes are skipped.
    """
    sigma = basis.elements
    mu, vectors = np.linalg.eigh(gamma)
    keep = np.abs(mu) > 1e-15 * max(1.0, np.abs(mu).max())
    if not keep.any():
        return np.zeros_like(gamma)
    jumps = np.einsum('km,kij->mij', vectors[:, keep], sigma)
    anticommutand = np.einsum('kl,kij,ljn->in', gamma, sigma, sigma, optimize=True)
    images = (np.einsum('m,mab,jbc,mcd->jad', mu[keep], jumps, sigma, jumps, optimize=True)
              - (anticommutand @ sigma + sigma @ anticommutand) / 2)
    return np.einsum('iab,jba->ij', sigma, images).real


def process_map(gammas: DecayAmplitudes, basis: OperatorBasis) -> ProcessMap:
    """T = 1 + sum_alpha sum_kl Gamma_{alpha,kl} R(k, l)"""
    if tuple(gammas.basis_labels) != tuple(basis.labels):
        raise ValidationError("Decay amplitudes were computed in a different basis")
    matrix = np.eye(len(basis.elements)) + _dissipator_transfer(gammas.total(), basis)
    return ProcessMap(matrix, basis)


def apply_ideal_gate(process: ProcessMap, unitary: np.ndarray) -> ProcessMap:
    """Error process followed by the target unitary"""
    return ProcessMap(transfer_matrix(unitary, process.basis) @ process.matrix, process.basis)


def choi_matrix(matrix: np.ndarray, basis: OperatorBasis) -> np.ndarray:
    """Unit-trace Choi matrix sum_ab |a><b| (x) E(|a><b|) / d"""
    d = basis.dimension
    choi = np.einsum('ij,jba,ice->acbe', matrix, basis.elements, basis.elements)
    return choi.reshape(d * d, d * d) / d


def choi_eigenvalues(matrix: np.ndarray, basis: OperatorBasis) -> np.ndarray:
    choi = choi_matrix(matrix, basis)
    return np.linalg.eigvalsh((choi + choi.conj().T) / 2)


def average_gate_fidelity(matrix: np.ndarray, dimension: int) -> float:
    """(tr T + d) / (d (d + 1)) for a transfer matrix in an orthonormal basis"""
    return float((np.trace(matrix) + dimension) / (dimension * (dimension + 1)))


@dataclass
class FidelityResult:
    fidelity: float
    infidelity: float
    per_channel: Dict[str, float]

    def to_dict(self) -> Dict:
        return {'fidelity': self.fidelity, 'infidelity': self.infidelity,
                'per_channel': dict(self.per_channel)}


def fidelity(gammas: DecayAmplitudes, dimension: Optional[int] = None) -> FidelityResult:
    """F = 1 - sum_{alpha k} Gamma_{alpha,kk} / (d + 1)"""
    d = dimension or gammas.dimension
    per_channel = {name: float(np.trace(g) / (d + 1)) for name, g in zip(gammas.channels, gammas.values)}
    infidelity = float(sum(per_channel.values()))
    return FidelityResult(1.0 - infidelity, infidelity, per_channel)


@dataclass(frozen=True, eq=False)
class CorrelationInfidelityMatrix:
    """I^(gg') summed over channels; per_channel shape (channels, G, G)

    Entries come from the two-sided frequency integral and are therefore the
    real part of the one-sided one; the matrix is real symmetric.
    """

    values: np.ndarray
    per_channel: np.ndarray
    channels: Tuple[str, ...]
    gate_labels: Tuple[str, ...]

    def total(self) -> float:
        return float(self.values.sum())

    def diagonal(self) -> np.ndarray:
        """Single-gate infidelities I^(g)"""
        return np.diag(self.values).copy()

    def row_sums(self) -> np.ndarray:
        """Total correlation infidelity attributed to each gate"""
        return self.values.sum(axis=1)

    def channel(self, name: str) -> np.ndarray:
        return self.per_channel[self.channels.index(name)]


def correlation_infidelities(cff: CorrelationFF, spectra: Mapping[str, SpectralDensity],
                             rule: str = DEFAULT_RULE,
                             end_corrections: bool = DEFAULT_END_CORRECTIONS) -> CorrelationInfidelityMatrix:
    """I^(gg') = 1/(d+1) sum_alpha (1/pi) int_0^inf S_alpha Re F_alpha^(gg') domega"""
    spectra = _resolve_spectra(cff.channels, spectra)
    per_channel = []
    for a, name in enumerate(cff.channels):
        value, _ = spectral_integral(cff.values[a].real, spectra[name], cff.omega, rule, end_corrections)
        per_channel.append(value / (cff.dimension + 1))
    per_channel = np.array(per_channel).reshape(len(cff.channels), cff.n_gates, cff.n_gates)
    return CorrelationInfidelityMatrix(per_channel.sum(axis=0), per_channel, cff.channels, cff.gate_labels)


def sequence_infidelity(sequence: PulseSequence, grid: FrequencyGrid,
                        basis: Optional[OperatorBasis] = None, rule: str = DEFAULT_RULE,
                        end_corrections: bool = DEFAULT_END_CORRECTIONS) -> FidelityResult:
    """Fidelity of a sequence under its own channel spectra"""
    basis = basis or build_pauli_basis(int(round(np.log2(sequence.dimension))))
    cm = control_matrix_freq(sequence, basis, grid)
    gammas = decay_amplitudes_freq(cm, sequence.spectra, rule, end_corrections)
    return fidelity(gammas, sequence.dimension)


def sequence_correlation_infidelities(sequence: PulseSequence, grid: FrequencyGrid,
                                      basis: Optional[OperatorBasis] = None, rule: str = DEFAULT_RULE,
                                      end_corrections: bool = DEFAULT_END_CORRECTIONS,
                                      cache: Optional[GateCache] = None) -> CorrelationInfidelityMatrix:
    basis = basis or build_pauli_basis(int(round(np.log2(sequence.dimension))))
    cm = sequence_control_matrix(sequence, basis, grid, cache)
    cff = correlation_ff(cm.parts, basis)
    return correlation_infidelities(cff, sequence.spectra, rule, end_corrections)
