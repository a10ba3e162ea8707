# tools/estimators.py
"""
Estimators on per-shot records: regression gains, spin-noise reduction,
squeezing parameters, dB bookkeeping and the clock frequency series.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence, Tuple

import numpy as np

from core.errors import AnalysisError
from core.models import FullTimePrecision, GainReport, ShotRecord, SqueezingReport

LABELS = ("A", "B")


def db(linear: float) -> float:
    if not linear > 0:
        raise ValueError(f"dB needs a positive linear value, got {linear}")
    return 10.0 * math.log10(linear)


def db_inv(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def optimal_beta(pre: Sequence[float], final: Sequence[float]) -> float:
    """Gain minimising Var(final - beta * pre): Cov(final, pre) / Var(pre)."""
    pre = np.asarray(pre, dtype=float)
    final = np.asarray(final, dtype=float)
    if pre.shape != final.shape:
        raise AnalysisError(f"pre and final differ in length ({pre.size} vs {final.size})")
    if pre.size < 2:
        raise AnalysisError(f"need at least 2 paired samples, got {pre.size}")
    dp = pre - pre.mean()
    var = float(np.dot(dp, dp))
    if var == 0.0:
        raise AnalysisError("pre-measurement series has zero variance")
    return float(np.dot(final - final.mean(), dp) / var)


# ---------- record columns ----------


def _finals(records: Sequence[ShotRecord], label: str) -> np.ndarray:
    values = [getattr(r, f"jz_final_{label}") for r in records]
    if any(v is None for v in values):
        raise AnalysisError(f"records lack final J_z values for ensemble {label}")
    return np.array(values, dtype=float)


def _pres(records: Sequence[ShotRecord], label: str) -> Optional[np.ndarray]:
    """Pre-measurement column, or None when no record carries one (unsqueezed runs)."""
    values = [getattr(r, f"jz_pre_{label}") for r in records]
    if all(v is None for v in values):
        return None
    if any(v is None for v in values):
        raise AnalysisError(f"records mix shots with and without a pre measurement on {label}")
    return np.array(values, dtype=float)


def _require(records: Sequence[ShotRecord], minimum: int = 2) -> None:
    if len(records) < minimum:
        raise AnalysisError(f"need at least {minimum} records, got {len(records)}")


def ensemble_betas(records: Sequence[ShotRecord]) -> Tuple[float, float]:
    """Per-ensemble optimal_beta; 0 for an ensemble without pre measurements."""
    _require(records)
    betas = []
    for label in LABELS:
        pre = _pres(records, label)
        betas.append(0.0 if pre is None else optimal_beta(pre, _finals(records, label)))
    return betas[0], betas[1]


def spin_noise_reduction(
    records: Sequence[ShotRecord],
    atom_count_a: int,
    atom_count_b: int,
    betas: Optional[Tuple[float, float]] = None,
) -> float:
    """
    Two-ensemble spin-noise reduction
        R = Var(J_A^d - J_B^d) / ((N_A + N_B) / 4),  J_X^d = J_X^final - beta_X J_X^pre
    as a linear ratio. Betas default to the per-ensemble optimum.
    """
    _require(records)
    if atom_count_a < 1 or atom_count_b < 1:
        raise ValueError("atom counts must be >= 1")
    betas = betas if betas is not None else ensemble_betas(records)
    diffs = []
    for label, beta in zip(LABELS, betas):
        final = _finals(records, label)
        pre = _pres(records, label)
        diffs.append(final if pre is None else final - beta * pre)
    spread = np.var(diffs[0] - diffs[1], ddof=1)
    return float(spread / ((atom_count_a + atom_count_b) / 4.0))


def squeezing_metrics(
    R: float,
    C_i: float,
    C_f: float,
    beta_a: float = 0.0,
    beta_b: float = 0.0,
) -> SqueezingReport:
    """Fill a SqueezingReport: C = C_f / sqrt(C_i), xi^2 = R / C^2, xi_W^2 = xi^2 / C_i."""
    if not 0.0 < C_i <= 1.0:
        raise ValueError(f"C_i must be in (0, 1], got {C_i}")
    if not 0.0 <= C_f <= 1.0:
        raise ValueError(f"C_f must be in [0, 1], got {C_f}")
    if not R > 0:
        raise ValueError(f"R must be > 0, got {R}")
    c_eff = C_f / math.sqrt(C_i)
    xi2 = R / c_eff**2 if c_eff > 0 else math.inf
    wineland = xi2 / C_i
    return SqueezingReport(
        beta_A=beta_a,
        beta_B=beta_b,
        R_linear=R,
        R_db=db(R),
        C_initial=C_i,
        C_final=C_f,
        C_effective=c_eff,
        xi2=xi2,
        xi2_db=db(xi2),
        xi2_wineland=wineland,
        xi2_wineland_db=db(wineland),
    )


def gain_beyond_sql(css_coefficient: float, sss_coefficient: float, qpn_unit_contrast: float, C_i: float) -> GainReport:
    """
    Squeezed-comparison gain under two conventions:
      variance_ratio_db:          SQL at unit contrast over the squeezed instability, squared
      css_gain_minus_contrast_db: measured CSS/SSS reduction less the 10 log10(1/C_i) contrast penalty
    """
    for name, value in (("css", css_coefficient), ("sss", sss_coefficient), ("sql", qpn_unit_contrast)):
        if not value > 0:
            raise ValueError(f"{name} coefficient must be > 0, got {value}")
    reduction = db((css_coefficient / sss_coefficient) ** 2)
    return GainReport(
        css_coefficient=css_coefficient,
        sss_coefficient=sss_coefficient,
        sql_unit_contrast_coefficient=qpn_unit_contrast,
        instability_reduction_db=reduction,
        variance_ratio_db=db((qpn_unit_contrast / sss_coefficient) ** 2),
        css_gain_minus_contrast_db=reduction + db(C_i),
    )


def full_time_precision(coefficient: float, total_time: float) -> FullTimePrecision:
    """Extrapolate a/sqrt(tau) to the full run; a single clock carries 1/sqrt(2) of the differential."""
    if total_time <= 0:
        raise ValueError(f"total_time must be > 0, got {total_time}")
    differential = coefficient / math.sqrt(total_time)
    return FullTimePrecision(
        total_time=total_time,
        differential=differential,
        single_clock=differential / math.sqrt(2.0),
    )


# ---------- clock comparison ----------


def differential_betas(records: Sequence[ShotRecord], atom_counts: Tuple[int, int]) -> Tuple[float, float]:
    """
    (beta_A, beta_B) minimising the variance of the differential phase
    phi_A - phi_B, fitted jointly by least squares.

    Laser noise common to both finals is part of the residual both
    regressors see, so it is not mistaken for pre/final correlation.
    """
    _require(records, 3)
    pres = [_pres(records, label) for label in LABELS]
    if pres[0] is None and pres[1] is None:
        return 0.0, 0.0
    lengths = [_spin_lengths(records, label, n) for label, n in zip(LABELS, atom_counts)]
    finals = [_finals(records, label) / length for label, length in zip(LABELS, lengths)]
    target = finals[0] - finals[1]
    columns, slots = [], []
    for slot, (pre, length, sign) in enumerate(zip(pres, lengths, (1.0, -1.0))):
        if pre is not None:
            columns.append(sign * pre / length)
            slots.append(slot)
    design = np.column_stack([c - c.mean() for c in columns])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise AnalysisError("pre measurements are degenerate; cannot fit differential betas")
    solution, *_ = np.linalg.lstsq(design, target - target.mean(), rcond=None)
    betas = [0.0, 0.0]
    for slot, value in zip(slots, solution):
        betas[slot] = float(value)
    return betas[0], betas[1]


def _spin_lengths(records: Sequence[ShotRecord], label: str, atom_count: int) -> np.ndarray:
    contrast = np.array([getattr(r, f"contrast_{label}") for r in records], dtype=float)
    if np.any(contrast <= 0):
        raise AnalysisError(f"non-positive closing contrast for ensemble {label}")
    return contrast * atom_count / 2.0


def phase_differences(
    records: Sequence[ShotRecord],
    betas: Tuple[float, float],
    atom_counts: Tuple[int, int],
) -> np.ndarray:
    """phi_A - phi_B per shot, phi_X = (J_X^final - beta_X J_X^pre) / (C_X N_X / 2)."""
    _require(records, 1)
    phases = []
    for label, beta, n in zip(LABELS, betas, atom_counts):
        signal = _finals(records, label)
        pre = _pres(records, label)
        if pre is not None:
            signal = signal - beta * pre
        phases.append(signal / _spin_lengths(records, label, n))
    return phases[0] - phases[1]


def frequency_series(
    records: Sequence[ShotRecord],
    betas: Tuple[float, float],
    atom_counts: Tuple[int, int],
    clock_frequency: float,
    interrogation_time: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """(times, fractional frequency difference A - B) for a run of shots."""
    if clock_frequency <= 0 or interrogation_time <= 0:
        raise ValueError("clock_frequency and interrogation_time must be > 0")
    ordered = sorted(records, key=lambda r: r.cycle_index)
    times = np.array([r.timestamp for r in ordered], dtype=float)
    phases = phase_differences(ordered, betas, atom_counts)
    return times, phases / (2.0 * math.pi * clock_frequency * interrogation_time)
