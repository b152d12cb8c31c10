#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Azimuth-scan processing: omni path gain, azimuth gain, effective patterns.

A scan is one rotation of the directional receiver: power samples versus
azimuth. Patterns are complex field amplitudes on a uniform grid; the
effective pattern is the circular convolution of channel and antenna.
Empirical CDFs carry Dvoretzky-Kiefer-Wolfowitz bands.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from common_runtime import DomainError, InputDataError


LOGGER = logging.getLogger(__name__)

MIN_SCAN_SAMPLES = 36
MIN_PATTERN_BINS = 144
DEFAULT_GRID_BINS = 144
DEFAULT_BEAMWIDTH_DEG = 10.0
DEFAULT_SIDELOBE_FLOOR_DB = -25.0
DEFAULT_ALPHA = 0.10

# Roof-edge degradation anchors: (degradation dB, cumulative probability)
DEFAULT_DEGRADATION_ANCHORS: tuple[tuple[float, float], ...] = ((0.0, 0.0), (2.0, 0.9), (4.0, 1.0))


@dataclass(frozen=True)
class ScanMetadata:
    tx_power_dbm: float = 0.0
    tx_gain_dbi: float = 0.0
    rx_elev_gain_dbi: float = 0.0


@dataclass(frozen=True, eq=False)
class AngularScan:
    angles_deg: np.ndarray
    power_mw: np.ndarray
    meta: ScanMetadata = field(default_factory=ScanMetadata)

    def __post_init__(self) -> None:
        angles = np.asarray(self.angles_deg, dtype=float)
        power = np.asarray(self.power_mw, dtype=float)
        if angles.size == 0 or power.size == 0:
            raise DomainError("Barrido vacío")
        if angles.shape != power.shape or angles.ndim != 1:
            raise DomainError(f"Longitudes distintas: {angles.size} ángulos, {power.size} potencias")
        if angles.size < MIN_SCAN_SAMPLES:
            raise DomainError(f"Se requieren al menos {MIN_SCAN_SAMPLES} muestras por giro (recibido {angles.size})")
        if np.any(angles < 0) or np.any(angles >= 360) or np.any(np.diff(angles) <= 0):
            raise DomainError("Los ángulos deben ser estrictamente crecientes en [0, 360)")
        if not np.all(power > 0):
            raise DomainError("Todas las potencias deben ser estrictamente positivas")
        object.__setattr__(self, "angles_deg", angles)
        object.__setattr__(self, "power_mw", power)


@dataclass(frozen=True, eq=False)
class ComplexPattern:
    angles_deg: np.ndarray
    amplitude: np.ndarray

    def __post_init__(self) -> None:
        angles = np.asarray(self.angles_deg, dtype=float)
        amplitude = np.asarray(self.amplitude, dtype=complex)
        if angles.shape != amplitude.shape or angles.ndim != 1:
            raise DomainError("Ángulos y amplitudes deben tener la misma longitud")
        if angles.size < MIN_PATTERN_BINS:
            raise DomainError(f"Un patrón requiere al menos {MIN_PATTERN_BINS} puntos (recibido {angles.size})")
        step = 360.0 / angles.size
        expected = angles[0] + step * np.arange(angles.size)
        if not np.allclose(angles, expected, atol=1e-9):
            raise DomainError("La grilla angular del patrón no es uniforme sobre [0, 360)")
        object.__setattr__(self, "angles_deg", angles)
        object.__setattr__(self, "amplitude", amplitude)

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    @property
    def n_bins(self) -> int:
        return int(self.angles_deg.size)


def uniform_grid(n_bins: int = DEFAULT_GRID_BINS) -> np.ndarray:
    return np.arange(n_bins) * (360.0 / n_bins)


def wrap_angle_deg(angle: np.ndarray | float) -> np.ndarray:
    """Map to (-180, 180]."""
    wrapped = -((-np.asarray(angle, dtype=float) + 180.0) % 360.0 - 180.0)
    return wrapped


# ============================================================
# Gains
# ============================================================

def omni_path_gain(scan: AngularScan) -> float:
    """Angular-mean received power minus transmit power and fixed antenna gains."""
    if scan.power_mw.size == 0:
        raise DomainError("Barrido vacío")
    p_all_dbm = 10.0 * np.log10(np.mean(scan.power_mw))
    meta = scan.meta
    return float(p_all_dbm - meta.tx_power_dbm - meta.tx_gain_dbi - meta.rx_elev_gain_dbi)


def _power_samples(samples: AngularScan | ComplexPattern | np.ndarray) -> np.ndarray:
    if isinstance(samples, AngularScan):
        return samples.power_mw
    if isinstance(samples, ComplexPattern):
        return samples.power
    return np.asarray(samples, dtype=float)


def azimuth_gain(samples: AngularScan | ComplexPattern | np.ndarray) -> float:
    """Max-over-mean of linear power, in dB."""
    power = _power_samples(samples)
    if power.size == 0:
        raise DomainError("Sin muestras de potencia")
    if np.any(power < 0):
        raise DomainError("Las potencias deben ser no negativas")
    mean = float(np.mean(power))
    if mean <= 0:
        raise DomainError("Potencia media nula")
    return float(10.0 * np.log10(np.max(power) / mean))


def azimuth_gain_batch(power: np.ndarray) -> np.ndarray:
    """Row-wise azimuth gain of a (trials, bins) power array."""
    return 10.0 * np.log10(np.max(power, axis=1) / np.mean(power, axis=1))


# ============================================================
# Patterns
# ============================================================

def gaussian_beam_pattern(
    n_bins: int = DEFAULT_GRID_BINS,
    beamwidth_deg: float = DEFAULT_BEAMWIDTH_DEG,
    sidelobe_floor_db: float | None = DEFAULT_SIDELOBE_FLOOR_DB,
    boresight_deg: float = 0.0,
) -> ComplexPattern:
    """Gaussian main lobe with the given half-power beamwidth, optional flat floor."""
    if not beamwidth_deg > 0:
        raise DomainError(f"El ancho de haz debe ser positivo (recibido {beamwidth_deg})")
    angles = uniform_grid(n_bins)
    offset = wrap_angle_deg(angles - boresight_deg)
    power = np.exp(-4.0 * np.log(2.0) * (offset / beamwidth_deg) ** 2)
    if sidelobe_floor_db is not None:
        power = np.maximum(power, 10.0 ** (sidelobe_floor_db / 10.0))
    return ComplexPattern(angles, np.sqrt(power).astype(complex))


def impulse_pattern(n_bins: int = DEFAULT_GRID_BINS, bin_index: int = 0, amplitude: complex = 1.0) -> ComplexPattern:
    values = np.zeros(n_bins, dtype=complex)
    values[bin_index % n_bins] = amplitude
    return ComplexPattern(uniform_grid(n_bins), values)


def isotropic_pattern(n_bins: int = DEFAULT_GRID_BINS) -> ComplexPattern:
    return ComplexPattern(uniform_grid(n_bins), np.ones(n_bins, dtype=complex))


def effective_pattern(channel: ComplexPattern, antenna: ComplexPattern) -> ComplexPattern:
    """Circular convolution of channel spectrum and antenna pattern.

    Normalised by 1/sqrt(N): an impulse channel returns the shifted antenna
    pattern with mean output power = mean channel power x mean antenna power.
    """
    if channel.n_bins != antenna.n_bins or not np.allclose(channel.angles_deg, antenna.angles_deg):
        raise DomainError(
            f"Las grillas angulares no coinciden ({channel.n_bins} vs {antenna.n_bins} puntos)"
        )
    n = channel.n_bins
    out = np.fft.ifft(np.fft.fft(channel.amplitude) * np.fft.fft(antenna.amplitude)) / np.sqrt(n)
    return ComplexPattern(channel.angles_deg, out)


def simulate_full_scattering(
    antenna: ComplexPattern,
    n_trials: int,
    seed: int | np.random.SeedSequence,
) -> np.ndarray:
    """Azimuth gain of the antenna seen through i.i.d. complex Gaussian channels.

    One child generator per trial, so the sample multiset does not depend on
    evaluation order.
    """
    if n_trials < 1:
        raise DomainError(f"n_trials debe ser >= 1 (recibido {n_trials})")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    n = antenna.n_bins
    channels = np.empty((n_trials, n), dtype=complex)
    for i, child in enumerate(root.spawn(n_trials)):
        draw = np.random.default_rng(child).standard_normal((2, n))
        channels[i] = (draw[0] + 1j * draw[1]) / np.sqrt(2.0)
    spectrum = np.fft.fft(channels, axis=1) * np.fft.fft(antenna.amplitude)[np.newaxis, :]
    power = np.abs(np.fft.ifft(spectrum, axis=1) / np.sqrt(n)) ** 2
    gains = azimuth_gain_batch(power)
    LOGGER.debug("Dispersión completa: %d ensayos, ganancia media %.2f dB", n_trials, gains.mean())
    return gains


def degradation_from_nominal(gains_db: np.ndarray, nominal_gain_db: float) -> np.ndarray:
    return nominal_gain_db - np.asarray(gains_db, dtype=float)


def fraction_within(degradation_db: np.ndarray, threshold_db: float) -> float:
    values = np.asarray(degradation_db, dtype=float)
    if values.size == 0:
        raise DomainError("Sin muestras")
    return float(np.mean(values <= threshold_db))


def synthetic_scan(
    n_samples: int = DEFAULT_GRID_BINS,
    boresight_deg: float = 0.0,
    beamwidth_deg: float = DEFAULT_BEAMWIDTH_DEG,
    sidelobe_floor_db: float = DEFAULT_SIDELOBE_FLOOR_DB,
    peak_power_mw: float = 1e-6,
    second_lobe_offset_deg: float | None = None,
    second_lobe_level_db: float = -10.0,
    meta: ScanMetadata | None = None,
) -> AngularScan:
    """Beam plus optional secondary lobe over a flat floor, as a measured scan."""
    angles = uniform_grid(n_samples)
    shape = np.exp(-4.0 * np.log(2.0) * (wrap_angle_deg(angles - boresight_deg) / beamwidth_deg) ** 2)
    if second_lobe_offset_deg is not None:
        lobe_center = boresight_deg + second_lobe_offset_deg
        shape = shape + 10.0 ** (second_lobe_level_db / 10.0) * np.exp(
            -4.0 * np.log(2.0) * (wrap_angle_deg(angles - lobe_center) / beamwidth_deg) ** 2
        )
    shape = np.maximum(shape, 10.0 ** (sidelobe_floor_db / 10.0))
    return AngularScan(angles, peak_power_mw * shape, meta or ScanMetadata())


# ============================================================
# Empirical CDF with DKW band
# ============================================================

def dkw_epsilon(n: int, alpha: float = DEFAULT_ALPHA) -> float:
    if n < 1:
        raise DomainError("n debe ser >= 1")
    if not 0 < alpha < 1:
        raise DomainError(f"alpha debe estar en (0, 1) (recibido {alpha})")
    return float(np.sqrt(np.log(2.0 / alpha) / (2.0 * n)))


@dataclass(frozen=True, eq=False)
class EmpiricalCdf:
    values: np.ndarray
    probabilities: np.ndarray
    band_epsilon: float
    alpha: float = DEFAULT_ALPHA

    @property
    def band_lower(self) -> np.ndarray:
        return np.clip(self.probabilities - self.band_epsilon, 0.0, 1.0)

    @property
    def band_upper(self) -> np.ndarray:
        return np.clip(self.probabilities + self.band_epsilon, 0.0, 1.0)

    def evaluate(self, x: np.ndarray | float) -> np.ndarray | float:
        result = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right") / self.values.size
        return float(result) if np.ndim(result) == 0 else result

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.values, q))


def empirical_cdf(samples: np.ndarray, alpha: float = DEFAULT_ALPHA) -> EmpiricalCdf:
    values = np.sort(np.asarray(samples, dtype=float).ravel())
    if values.size < 2:
        raise DomainError(f"Se requieren al menos 2 muestras (recibido {values.size})")
    n = values.size
    probabilities = np.arange(1, n + 1) / n
    return EmpiricalCdf(values, probabilities, dkw_epsilon(n, alpha), alpha)


# ============================================================
# Degradation CDF for link budgets
# ============================================================

@dataclass(frozen=True, eq=False)
class DegradationCdf:
    """Piecewise-linear CDF of directional-gain degradation, sampled by inversion."""

    degradation_db: np.ndarray
    probability: np.ndarray

    def __post_init__(self) -> None:
        deg = np.asarray(self.degradation_db, dtype=float)
        prob = np.asarray(self.probability, dtype=float)
        if deg.size < 2 or deg.shape != prob.shape:
            raise InputDataError("La CDF de degradación requiere al menos 2 puntos (degradation_db, prob)")
        if np.any(np.diff(deg) < 0) or np.any(np.diff(prob) < 0):
            raise InputDataError("La CDF de degradación debe ser no decreciente")
        if not (np.isclose(prob[0], 0.0) and np.isclose(prob[-1], 1.0)):
            raise InputDataError("La CDF de degradación debe ir de prob=0 a prob=1")
        if np.any(deg < 0):
            raise InputDataError("La degradación debe ser >= 0 dB")
        object.__setattr__(self, "degradation_db", deg)
        object.__setattr__(self, "probability", prob)

    @classmethod
    def default(cls) -> "DegradationCdf":
        deg, prob = zip(*DEFAULT_DEGRADATION_ANCHORS)
        return cls(np.array(deg), np.array(prob))

    @classmethod
    def zero(cls) -> "DegradationCdf":
        return cls(np.zeros(2), np.array([0.0, 1.0]))

    def inverse(self, u: np.ndarray | float) -> np.ndarray:
        return np.interp(np.asarray(u, dtype=float), self.probability, self.degradation_db)

    def sample(self, rng: np.random.Generator, size: int | tuple[int, ...]) -> np.ndarray:
        return self.inverse(rng.random(size))
