"""
Periodogram of an ordered measurement series

Power at frequency k/n is |X_k|^2 / n of the mean-removed series for k = 1..n//2, so the two-sided
sum over all bins equals the series' sum of squares about its mean. Samples are assumed to be evenly
spaced; real runs are not, so periods in seconds are approximate.
"""

import logging

import numpy as np

from dataclasses import dataclass
from typing import List, Optional

from helper.model import ValidationError

logger = logging.getLogger(__name__)

MIN_LENGTH = 4


@dataclass(frozen=True)
class Spectrum:
    frequencies: np.ndarray
    power: np.ndarray
    n: int
    sample_spacing: Optional[float] = None

    @property
    def periods(self) -> np.ndarray:
        return 1.0 / self.frequencies

    @property
    def weights(self) -> np.ndarray:
        """Every bin but the Nyquist one has a mirror image in the two-sided spectrum."""
        weights = np.full(len(self.power), 2.0)
        if self.n % 2 == 0:
            weights[-1] = 1.0
        return weights

    @property
    def total_power(self) -> float:
        return float((self.weights * self.power).sum())

    def rows(self) -> List[dict]:
        rows = []
        for f, p in zip(self.frequencies, self.power):
            seconds = self.sample_spacing / f if self.sample_spacing else None
            rows.append({
                'frequency': float(f),
                'period_samples': float(1.0 / f),
                'period_seconds': seconds,
                'power': float(p),
                'period_minutes': seconds / 60.0 if seconds is not None else None,
            })
        return rows


@dataclass(frozen=True)
class DominantPeriod:
    period_samples: float
    period_seconds: Optional[float]
    power_share: float


def periodogram(series, sample_spacing: Optional[float] = None, window: Optional[str] = None) -> Spectrum:
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or len(x) < MIN_LENGTH:
        raise ValidationError(f"Spectral analysis needs at least {MIN_LENGTH} values, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("Series contains non-finite values")
    if sample_spacing is not None and sample_spacing <= 0:
        raise ValidationError(f"Sample spacing must be positive, got {sample_spacing}")

    n = len(x)
    x = x - x.mean()
    if window == 'hann':
        x = x * np.hanning(n)
    elif window is not None:
        raise ValidationError(f"Unknown window {window!r}")

    coeffs = np.fft.rfft(x)[1:n // 2 + 1]
    power = np.abs(coeffs) ** 2 / n
    frequencies = np.arange(1, n // 2 + 1) / n

    return Spectrum(frequencies=frequencies, power=power, n=n, sample_spacing=sample_spacing)


def dominant_periods(spectrum: Spectrum, k: int = 1) -> List[DominantPeriod]:
    """
    The k strongest bins, strongest first. power_share is the bin's two-sided power over
    Spectrum.total_power, so the shares of all bins sum to one.
    """
    if k < 1:
        raise ValidationError(f"k must be at least 1, got {k}")
    total = spectrum.total_power
    weights = spectrum.weights
    # stable sort keeps the lower frequency first on equal power
    order = np.argsort(-spectrum.power, kind='stable')[:k]
    result = []
    for i in order:
        f = float(spectrum.frequencies[i])
        result.append(DominantPeriod(
            period_samples=1.0 / f,
            period_seconds=spectrum.sample_spacing / f if spectrum.sample_spacing else None,
            power_share=float(weights[i] * spectrum.power[i]) / total if total > 0 else 0.0,
        ))
    return result
