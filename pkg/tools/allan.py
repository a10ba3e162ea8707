# tools/allan.py
"""Overlapping Allan deviation, white-FM fit, drift removal and the QPN reference."""

from __future__ import annotations

import logging
import math
from typing import Optional, Sequence, Tuple

import allantools
import numpy as np
from scipy.optimize import curve_fit

from core.errors import AnalysisError
from core.models import AllanSeries

logger = logging.getLogger(__name__)

# power-law exponent of white frequency noise, and the difference order of the Allan variance
WHITE_FM_ALPHA = 0
ALLAN_D = 2


def default_taus(n_points: int, cycle_time: float) -> list[float]:
    """Octave-spaced averaging times m * cycle_time, m = 1, 2, 4, ... <= n_points / 4."""
    if n_points < 2:
        raise AnalysisError(f"need at least 2 frequency points, got {n_points}")
    limit = max(1, n_points // 4)
    factors = []
    m = 1
    while m <= limit:
        factors.append(m)
        m *= 2
    return [m * cycle_time for m in factors]


def _averaging_factors(taus: Sequence[float], cycle_time: float, n_points: int) -> list[int]:
    factors = []
    for tau in taus:
        m = int(round(tau / cycle_time))
        if m < 1 or not math.isclose(m * cycle_time, tau, rel_tol=1e-9):
            raise ValueError(f"tau={tau} is not a positive multiple of cycle_time={cycle_time}")
        if 2 * m > n_points:
            raise ValueError(f"tau={tau} exceeds half the record length ({n_points * cycle_time} s)")
        factors.append(m)
    return sorted(set(factors))


def _oadev(freq: np.ndarray, factors: Sequence[int]) -> np.ndarray:
    # unit rate with integer taus keeps allantools' floor(tau * rate) equal to m;
    # adev of frequency data does not depend on the rate
    used, adev, _, _ = allantools.oadev(freq, rate=1.0, data_type="freq", taus=np.asarray(factors, dtype=float))
    if len(used) != len(factors):
        raise AnalysisError(f"allantools returned {len(used)} of {len(factors)} averaging times")
    return np.asarray(adev, dtype=float)


def overlapping_avar(freq: np.ndarray, m: int) -> float:
    """Overlapping Allan variance at averaging factor m."""
    return float(_oadev(np.asarray(freq, dtype=float), [m])[0] ** 2)


def white_fm_edf(n_points: int, m: int) -> float:
    """Equivalent degrees of freedom of the overlapping estimator for white FM (Greenhall)."""
    # n_points frequency values integrate to n_points + 1 phase samples
    edf = allantools.edf_greenhall(
        alpha=WHITE_FM_ALPHA, d=ALLAN_D, m=m, N=n_points + 1, overlapping=True, modified=False
    )
    return max(float(edf), 1.0)


def fit_white_fm(taus: Sequence[float], adev: Sequence[float], sigma: Optional[Sequence[float]] = None) -> float:
    """Weighted least-squares a in adev = a / sqrt(tau)."""
    taus = np.asarray(taus, dtype=float)
    adev = np.asarray(adev, dtype=float)
    if taus.size == 0:
        raise AnalysisError("no points to fit")
    if not np.any(adev > 0):
        return 0.0
    if sigma is not None:
        sigma = np.asarray(sigma, dtype=float)
        if np.any(sigma <= 0):
            sigma = None
    guess = float(np.median(adev * np.sqrt(taus)))
    (coeff,), _ = curve_fit(lambda t, a: a / np.sqrt(t), taus, adev, p0=(guess,), sigma=sigma)
    return float(coeff)


def allan_deviation(
    freq_series: Sequence[float],
    cycle_time: float,
    taus: Optional[Sequence[float]] = None,
    confidence: float = 0.683,
) -> AllanSeries:
    """
    Overlapping Allan deviation of a uniformly sampled fractional-frequency series.

    Parameters
    ----------
    freq_series : sequence of float
        One value per cycle.
    cycle_time : float
        Sampling interval T_c in seconds.
    taus : sequence of float, optional
        Averaging times, multiples of cycle_time and at most half the record.
        Defaults to octaves up to a quarter of the record.
    confidence : float
        Two-sided chi-squared interval with Greenhall white-FM degrees of freedom.
    """
    if cycle_time <= 0:
        raise ValueError(f"cycle_time must be > 0, got {cycle_time}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must be in (0, 1), got {confidence}")
    freq = np.asarray(freq_series, dtype=float)
    if taus is None:
        taus = default_taus(freq.size, cycle_time)
    factors = _averaging_factors(taus, cycle_time, freq.size)

    adev = [float(d) for d in _oadev(freq, factors)]
    low, high = [], []
    for m, dev in zip(factors, adev):
        lo, hi = allantools.confidence_interval(dev, white_fm_edf(freq.size, m), ci=confidence)
        low.append(min(float(lo), dev))
        high.append(max(float(hi), dev))

    tau_values = [m * cycle_time for m in factors]
    half_width = [(h - lo) / 2.0 for lo, h in zip(low, high)]
    coefficient = fit_white_fm(tau_values, adev, half_width)
    logger.debug("allan deviation over %d taus, white-FM coefficient %.4g", len(factors), coefficient)
    return AllanSeries(taus=tau_values, adev=adev, ci_low=low, ci_high=high, fitted_coefficient=coefficient)


def fit_linear_drift(freq_series: Sequence[float], times: Sequence[float]) -> Tuple[float, float]:
    """Least-squares (offset, slope) of freq = offset + slope * t."""
    freq = np.asarray(freq_series, dtype=float)
    times = np.asarray(times, dtype=float)
    if freq.shape != times.shape:
        raise ValueError("freq_series and times differ in length")
    if freq.size < 3:
        raise AnalysisError(f"drift removal needs at least 3 points, got {freq.size}")
    design = np.column_stack([np.ones_like(times), times - times.mean()])
    (offset, slope), *_ = np.linalg.lstsq(design, freq, rcond=None)
    return float(offset - slope * times.mean()), float(slope)


def remove_linear_drift(freq_series: Sequence[float], times: Sequence[float]) -> np.ndarray:
    """Residual after subtracting the least-squares line; zero mean and zero slope."""
    offset, slope = fit_linear_drift(freq_series, times)
    return np.asarray(freq_series, dtype=float) - (offset + slope * np.asarray(times, dtype=float))


def qpn_instability(
    atom_count: int,
    contrast: float,
    interrogation_time: float,
    cycle_time: float,
    clock_frequency: float,
) -> float:
    """
    Projection-noise limit of the differential two-ensemble comparison,
    sigma(tau) * sqrt(tau) = sqrt(2) / (C sqrt(N)) / (2 pi nu0 T) * sqrt(T_c).
    """
    for name, value in (
        ("atom_count", atom_count),
        ("contrast", contrast),
        ("interrogation_time", interrogation_time),
        ("cycle_time", cycle_time),
        ("clock_frequency", clock_frequency),
    ):
        if not value > 0:
            raise ValueError(f"{name} must be > 0, got {value}")
    phase = math.sqrt(2.0) / (contrast * math.sqrt(atom_count))
    return phase / (2.0 * math.pi * clock_frequency * interrogation_time) * math.sqrt(cycle_time)
