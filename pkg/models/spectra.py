#!/usr/bin/env python3
"""
Noise Spectra for FFTracer
Two-sided power spectral densities S(omega), frequency grids and the
perturbative noise-strength estimate xi.

Conventions: omega is an angular frequency, S is two-sided and even in omega,
so sigma**2 = (1/2pi) int_{-inf}^{inf} S(omega) domega.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy import integrate, optimize
from scipy.interpolate import CubicSpline

from models.exceptions import NonIntegrableSpectrumError, ValidationError

logger = logging.getLogger(__name__)

# default frequency grid: log-spaced points, then linear with spacing DEFAULT_RESOLUTION / tau
DEFAULT_GRID_POINTS = 2000
DEFAULT_RESOLUTION = 0.1

ArrayLike = Union[float, np.ndarray]


class SpectralDensity(ABC):
    """Base class of all spectrum models"""

    kind = 'abstract'

    def __call__(self, omega: ArrayLike) -> ArrayLike:
        return self.evaluate(omega)

    @abstractmethod
    def evaluate(self, omega: ArrayLike) -> ArrayLike:
        """S(|omega|)"""

    @abstractmethod
    def variance(self, bandwidth: Optional[float] = None) -> float:
        """sigma**2, optionally restricted to |omega| <= bandwidth"""

    @abstractmethod
    def tail_integral(self, omega_c: float, power: float = 2.0) -> float:
        """int_{omega_c}^inf S(omega) / omega**power domega, power > 1"""

    @abstractmethod
    def scaled(self, factor: float) -> 'SpectralDensity':
        """Copy with S multiplied by factor"""

    @abstractmethod
    def to_config(self) -> Dict:
        """Run-config representation"""

    @property
    def upper_support(self) -> float:
        """Largest frequency where S may be nonzero"""
        return np.inf


def _as_output(values: np.ndarray, omega: ArrayLike) -> ArrayLike:
    return float(values) if np.ndim(omega) == 0 else values


class WhiteSpectrum(SpectralDensity):
    """Flat spectrum S0, optionally band-limited to |omega| <= bandwidth"""

    kind = 'white'

    def __init__(self, s0: float, bandwidth: Optional[float] = None):
        if not np.isfinite(s0) or s0 < 0:
            raise ValidationError(f"White spectrum level must be finite and >= 0, got {s0}")
        if bandwidth is not None and not (np.isfinite(bandwidth) and bandwidth > 0):
            raise ValidationError(f"Bandwidth must be positive, got {bandwidth}")
        self.s0 = float(s0)
        self.bandwidth = None if bandwidth is None else float(bandwidth)

    def evaluate(self, omega: ArrayLike) -> ArrayLike:
        w = np.abs(np.asarray(omega, dtype=float))
        values = np.full(w.shape, self.s0)
        if self.bandwidth is not None:
            values[w > self.bandwidth] = 0.0
        return _as_output(values, omega)

    def variance(self, bandwidth: Optional[float] = None) -> float:
        limits = [b for b in (bandwidth, self.bandwidth) if b is not None]
        if not limits:
            raise NonIntegrableSpectrumError(
                "White spectrum has infinite variance; supply a band limit"
            )
        return self.s0 * min(limits) / np.pi

    def tail_integral(self, omega_c: float, power: float = 2.0) -> float:
        upper = 0.0 if self.bandwidth is None else self.bandwidth**(1.0 - power)
        return self.s0 * max(0.0, omega_c**(1.0 - power) - upper) / (power - 1.0)

    @property
    def upper_support(self) -> float:
        return np.inf if self.bandwidth is None else self.bandwidth

    @property
    def is_delta_correlated(self) -> bool:
        return self.bandwidth is None

    def scaled(self, factor: float) -> 'WhiteSpectrum':
        return WhiteSpectrum(self.s0 * factor, self.bandwidth)

    def to_config(self) -> Dict:
        config = {'type': 'white', 's0': self.s0}
        if self.bandwidth is not None:
            config['bandwidth'] = self.bandwidth
        return config

    def __repr__(self) -> str:
        return f"WhiteSpectrum(s0={self.s0!r}, bandwidth={self.bandwidth!r})"


class PowerLawSpectrum(SpectralDensity):
    """A / |omega|**gamma between omega_min and omega_max

    Below omega_min the value is clamped to S(omega_min) (plateau), above
    omega_max it is zero. The plateau regularizes evaluation at low
    frequencies; ``variance`` counts the in-band power only.
    """

    kind = 'power_law'

    def __init__(self, amplitude: float, exponent: float, omega_min: float, omega_max: float):
        if not np.isfinite(amplitude) or amplitude < 0:
            raise ValidationError(f"Power-law amplitude must be finite and >= 0, got {amplitude}")
        if not np.isfinite(exponent) or exponent < 0:
            raise ValidationError(f"Power-law exponent must be >= 0, got {exponent}")
        if not (np.isfinite(omega_max) and 0 < omega_min < omega_max):
            raise ValidationError(
                f"Power-law cutoffs need 0 < omega_min < omega_max, got {omega_min}, {omega_max}"
            )
        self.amplitude = float(amplitude)
        self.exponent = float(exponent)
        self.omega_min = float(omega_min)
        self.omega_max = float(omega_max)

    def evaluate(self, omega: ArrayLike) -> ArrayLike:
        w = np.abs(np.asarray(omega, dtype=float))
        values = self.amplitude * np.clip(w, self.omega_min, None)**(-self.exponent)
        values = np.where(w > self.omega_max, 0.0, values)
        return _as_output(values, omega)

    def _band_integral(self, lo: float, hi: float, power: float) -> float:
        """int_lo^hi A omega**(power - gamma) domega"""
        if hi <= lo:
            return 0.0
        e = power - self.exponent + 1
        if abs(e) < 1e-12:
            return self.amplitude * np.log(hi / lo)
        return self.amplitude * (hi**e - lo**e) / e

    def variance(self, bandwidth: Optional[float] = None) -> float:
        upper = self.omega_max if bandwidth is None else min(self.omega_max, bandwidth)
        return self._band_integral(self.omega_min, upper, 0.0) / np.pi

    def tail_integral(self, omega_c: float, power: float = 2.0) -> float:
        if omega_c >= self.omega_max:
            return 0.0
        plateau = 0.0
        if omega_c < self.omega_min:
            level = self.amplitude * self.omega_min**(-self.exponent)
            plateau = level * (omega_c**(1.0 - power) - self.omega_min**(1.0 - power)) / (power - 1.0)
        return plateau + self._band_integral(max(omega_c, self.omega_min), self.omega_max, -power)

    @property
    def upper_support(self) -> float:
        return self.omega_max

    def scaled(self, factor: float) -> 'PowerLawSpectrum':
        return PowerLawSpectrum(self.amplitude * factor, self.exponent,
                                self.omega_min, self.omega_max)

    def to_config(self) -> Dict:
        return {'type': 'power_law', 'amplitude': self.amplitude, 'exponent': self.exponent,
                'omega_min': self.omega_min, 'omega_max': self.omega_max}

    def __repr__(self) -> str:
        return (f"PowerLawSpectrum(amplitude={self.amplitude!r}, exponent={self.exponent!r}, "
                f"omega_min={self.omega_min!r}, omega_max={self.omega_max!r})")


class TabulatedSpectrum(SpectralDensity):
    """Tabulated S_i on ascending omega_i, log-log linear in between, 0 outside"""

    kind = 'tabulated'

    def __init__(self, omega: np.ndarray, values: np.ndarray, source: Optional[str] = None):
        omega = np.asarray(omega, dtype=float)
        values = np.asarray(values, dtype=float)
        if omega.ndim != 1 or omega.shape != values.shape or len(omega) < 2:
            raise ValidationError("Tabulated spectrum needs two 1d arrays of equal length >= 2")
        if np.any(omega <= 0) or np.any(np.diff(omega) <= 0):
            raise ValidationError("Tabulated frequencies must be positive and strictly ascending")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValidationError("Tabulated spectrum values must be finite and >= 0")
        self.omega = omega
        self.values = values
        self.source = source
        self._log_omega = np.log(omega)
        self._log_values = np.log(np.maximum(values, np.finfo(float).tiny))
        ratio = np.diff(self._log_values) / np.diff(self._log_omega)
        self._slopes = ratio

    def evaluate(self, omega: ArrayLike) -> ArrayLike:
        w = np.abs(np.asarray(omega, dtype=float))
        inside = (w >= self.omega[0]) & (w <= self.omega[-1])
        values = np.zeros(w.shape)
        if np.any(inside):
            values[inside] = np.exp(np.interp(np.log(w[inside]), self._log_omega, self._log_values))
            values[inside & (values <= np.finfo(float).tiny * 10)] = 0.0
        return _as_output(values, omega)

    def _segment_integral(self, i: int, a: float, b: float, power: float) -> float:
        """Exact integral of the interpolant times omega**power over [a, b] in segment i"""
        if b <= a or self.values[i] == 0 and self.values[i + 1] == 0:
            return 0.0
        s_i, w_i, p = np.exp(self._log_values[i]), self.omega[i], self._slopes[i]
        e = p + power + 1
        if abs(e) < 1e-12:
            return s_i * w_i**(power + 1) * np.log(b / a)
        return s_i * w_i**(power + 1) * ((b / w_i)**e - (a / w_i)**e) / e

    def _integral(self, lo: float, hi: float, power: float) -> float:
        total = 0.0
        for i in range(len(self.omega) - 1):
            a = max(lo, self.omega[i])
            b = min(hi, self.omega[i + 1])
            total += self._segment_integral(i, a, b, power)
        return total

    def variance(self, bandwidth: Optional[float] = None) -> float:
        upper = self.omega[-1] if bandwidth is None else min(self.omega[-1], bandwidth)
        return self._integral(0.0, upper, 0.0) / np.pi

    def tail_integral(self, omega_c: float, power: float = 2.0) -> float:
        return self._integral(omega_c, np.inf, -power)

    @property
    def upper_support(self) -> float:
        return float(self.omega[-1])

    def scaled(self, factor: float) -> 'TabulatedSpectrum':
        return TabulatedSpectrum(self.omega, self.values * factor, self.source)

    def to_config(self) -> Dict:
        if self.source is not None:
            return {'type': 'tabulated', 'path': self.source}
        return {'type': 'tabulated', 'omega': self.omega.tolist(), 'values': self.values.tolist()}

    def __repr__(self) -> str:
        return f"TabulatedSpectrum(n={len(self.omega)}, range=({self.omega[0]:g}, {self.omega[-1]:g}))"


def load_tabulated(path: Union[str, Path]) -> TabulatedSpectrum:
    """Read a two-column (omega, S) text file; '#' starts a comment"""
    table = pd.read_csv(path, comment='#', sep=r'\s+', header=None, names=['omega', 'psd'])
    if table.isnull().values.any():
        raise ValidationError(f"Tabulated spectrum {path} has missing or non-numeric entries")
    logger.info(f"Loaded tabulated spectrum with {len(table)} points from {path}")
    return TabulatedSpectrum(table['omega'].to_numpy(float), table['psd'].to_numpy(float),
                             source=str(path))


GRID_SPACINGS = ('log', 'linear', 'hybrid', 'custom')


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Strictly ascending positive angular frequencies"""

    values: np.ndarray
    spacing: str = 'custom'

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or len(values) < 2:
            raise ValidationError("Frequency grid needs at least two points")
        if not np.all(np.isfinite(values)) or values[0] <= 0 or np.any(np.diff(values) <= 0):
            raise ValidationError("Frequency grid must be positive and strictly ascending")
        if self.spacing not in GRID_SPACINGS:
            raise ValidationError(f"Unknown grid spacing '{self.spacing}'")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @classmethod
    def log(cls, omega_min: float, omega_max: float, n_points: int) -> 'FrequencyGrid':
        if not 0 < omega_min < omega_max:
            raise ValidationError(f"Need 0 < omega_min < omega_max, got {omega_min}, {omega_max}")
        return cls(np.geomspace(omega_min, omega_max, int(n_points)), 'log')

    @classmethod
    def linear(cls, omega_min: float, omega_max: float, n_points: int) -> 'FrequencyGrid':
        if not 0 < omega_min < omega_max:
            raise ValidationError(f"Need 0 < omega_min < omega_max, got {omega_min}, {omega_max}")
        return cls(np.linspace(omega_min, omega_max, int(n_points)), 'linear')

    @classmethod
    def hybrid(cls, omega_min: float, omega_max: float, n_log: int, step: float) -> 'FrequencyGrid':
        """n_log log-spaced points up to where their spacing reaches step, linear above

        Filter functions of a sequence of duration tau oscillate with periods
        down to 2 pi / tau, which a log grid stops resolving at high
        frequencies. Falls back to a plain log grid if its spacing never
        exceeds step.
        """
        if not 0 < omega_min < omega_max:
            raise ValidationError(f"Need 0 < omega_min < omega_max, got {omega_min}, {omega_max}")
        if not step > 0 or int(n_log) < 2:
            raise ValidationError(f"Hybrid grid needs step > 0 and n_log >= 2, got {step}, {n_log}")
        n_log = int(n_log)

        def last_log_step(corner: float) -> float:
            return corner * -np.expm1(-np.log(corner / omega_min) / (n_log - 1)) - step

        if last_log_step(omega_max) <= 0:
            return cls(np.geomspace(omega_min, omega_max, n_log), 'hybrid')
        corner = optimize.brentq(last_log_step, omega_min, omega_max, xtol=1e-12 * omega_max)
        n_linear = int(np.ceil((omega_max - corner) / step)) + 1
        values = np.concatenate([np.geomspace(omega_min, corner, n_log),
                                 np.linspace(corner, omega_max, n_linear)[1:]])
        return cls(values, 'hybrid')

    @classmethod
    def for_duration(cls, tau: float, n_points: int = DEFAULT_GRID_POINTS,
                     lower: float = 1e-4, upper: float = 1e4,
                     resolution: Optional[float] = DEFAULT_RESOLUTION) -> 'FrequencyGrid':
        """Default grid covering omega * tau in [lower, upper]

        n_points log-spaced points, continued linearly with spacing
        resolution / tau; ``resolution=None`` gives a plain log grid.
        """
        if resolution is None:
            return cls.log(lower / tau, upper / tau, n_points)
        return cls.hybrid(lower / tau, upper / tau, n_points, resolution / tau)


    def __len__(self) -> int:
        return len(self.values)

    @property
    def omega_min(self) -> float:
        return float(self.values[0])

    @property
    def omega_max(self) -> float:
        return float(self.values[-1])

    def matches(self, other: 'FrequencyGrid') -> bool:
        return len(self) == len(other) and bool(np.array_equal(self.values, other.values))

    def to_config(self) -> Dict:
        return {'spacing': self.spacing, 'omega_min': self.omega_min,
                'omega_max': self.omega_max, 'points': len(self)}


def variance(spectrum: SpectralDensity, bandwidth: Optional[float] = None) -> float:
    return spectrum.variance(bandwidth)


def evaluate(spectrum: SpectralDensity, omega: ArrayLike) -> ArrayLike:
    return spectrum.evaluate(omega)


@dataclass
class NoiseStrength:
    """Perturbative smallness parameter per channel and summed"""

    per_channel: Dict[str, float]
    sigma: Dict[str, float]
    total: float
    heuristic: bool = False
    notes: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {'per_channel': dict(self.per_channel), 'sigma': dict(self.sigma),
                'total': self.total, 'heuristic': self.heuristic, 'notes': dict(self.notes)}


def xi_estimate(sequence, bandwidth: Optional[float] = None) -> NoiseStrength:
    """xi_alpha = max_g ||B_alpha^(g)|| sigma_alpha tau (spectral norm)

    Flagged heuristic when B_alpha changes between segments, since the
    estimate is only rigorous for constant noise operators.
    """
    tau = sequence.total_duration()
    per_channel, sigmas, notes = {}, {}, {}
    heuristic = False
    for channel in sequence.channels:
        operators = [seg.noise_operators[channel.name] for seg in sequence.segments]
        norm = max(np.linalg.norm(op, 2) for op in operators)
        if any(not np.allclose(op, operators[0]) for op in operators[1:]):
            heuristic = True
            notes[channel.name] = 'noise operator varies across segments'
        sigma = np.sqrt(channel.spectrum.variance(bandwidth))
        sigmas[channel.name] = float(sigma)
        per_channel[channel.name] = float(norm * sigma * tau)

    total = float(sum(per_channel.values()))
    if total > 0.1:
        logger.warning(f"Noise strength xi = {total:.3g} is not small; perturbative results may be inaccurate")
    return NoiseStrength(per_channel, sigmas, total, heuristic, notes)


def _cosine_transform(spectrum: SpectralDensity, lag: float) -> float:
    """(1/pi) int_0^inf S(omega) cos(omega lag) domega"""
    if isinstance(spectrum, WhiteSpectrum):
        if spectrum.bandwidth is None:
            raise NonIntegrableSpectrumError("White noise without band limit is delta correlated")
        band = spectrum.bandwidth
        if lag == 0:
            return spectrum.s0 * band / np.pi
        return spectrum.s0 * np.sin(band * lag) / (np.pi * lag)

    if isinstance(spectrum, PowerLawSpectrum):
        level = spectrum.evaluate(spectrum.omega_min)
        w0 = spectrum.omega_min
        plateau = level * w0 if lag == 0 else level * np.sin(w0 * lag) / lag
        lo, hi = spectrum.omega_min, spectrum.omega_max
    else:
        plateau = 0.0
        lo, hi = float(spectrum.omega[0]), float(spectrum.omega[-1])

    if lag == 0:
        body, _ = integrate.quad(spectrum.evaluate, lo, hi, limit=500)
    else:
        body, _ = integrate.quad(spectrum.evaluate, lo, hi, weight='cos', wvar=lag, limit=500)
    return (plateau + body) / np.pi


def autocorrelation(spectrum: SpectralDensity, max_lag: Optional[float] = None,
                    n_lags: int = 2001) -> Callable[[np.ndarray], np.ndarray]:
    """C(lag) = <b(t + lag) b(t)> from the spectrum

    With ``max_lag`` the transform is tabulated on n_lags points and
    interpolated by a cubic spline; otherwise each lag is integrated directly.
    """
    if max_lag is None:
        def correlation(lags):
            lags = np.abs(np.asarray(lags, dtype=float))
            out = np.array([_cosine_transform(spectrum, lag) for lag in lags.ravel()])
            return out.reshape(lags.shape)
        return correlation

    grid = np.linspace(0.0, max_lag, n_lags)
    table = np.array([_cosine_transform(spectrum, lag) for lag in grid])
    spline = CubicSpline(grid, table)

    def correlation(lags):
        return spline(np.abs(np.asarray(lags, dtype=float)))
    return correlation
