# tools/series_io.py
"""CSV artifacts: frequency series, Allan series and per-shot records (lossless at 17 digits)."""

from __future__ import annotations

import math
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from core.errors import AnalysisError
from core.models import AllanSeries, ContrastPoint, LightShiftRow, PhotonSweepRow, ShotRecord

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.17g"
FREQUENCY_COLUMNS = ["time_s", "value"]
ALLAN_COLUMNS = ["tau_s", "adev", "ci_low", "ci_high"]


def _write(df: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def _read(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def write_frequency_series(path: PathLike, times: Sequence[float], values: Sequence[float]) -> Path:
    if len(times) != len(values):
        raise ValueError("times and values differ in length")
    return _write(pd.DataFrame({"time_s": np.asarray(times, float), "value": np.asarray(values, float)}), path)


def read_frequency_series(path: PathLike, value_column: str = "value") -> Tuple[np.ndarray, np.ndarray]:
    """Return (times, values); times fall back to the row index when there is no time_s column."""
    df = _read(path)
    if value_column not in df.columns:
        raise AnalysisError(f"{path}: no column {value_column!r} (have {list(df.columns)})")
    values = df[value_column].to_numpy(dtype=float)
    if "time_s" in df.columns:
        times = df["time_s"].to_numpy(dtype=float)
    else:
        times = np.arange(values.size, dtype=float)
    if not np.all(np.isfinite(values)):
        raise AnalysisError(f"{path}: non-finite values in {value_column!r}")
    return times, values


def infer_cycle_time(times: np.ndarray) -> float:
    """Sampling interval of a uniformly spaced time column."""
    if times.size < 2:
        raise AnalysisError("need at least two samples to infer the cycle time")
    steps = np.diff(times)
    cycle = float(np.median(steps))
    if cycle <= 0 or not np.allclose(steps, cycle, rtol=1e-6, atol=0.0):
        raise AnalysisError("frequency series is not uniformly sampled")
    return cycle


def write_allan_series(path: PathLike, series: AllanSeries) -> Path:
    df = pd.DataFrame(
        {"tau_s": series.taus, "adev": series.adev, "ci_low": series.ci_low, "ci_high": series.ci_high},
        columns=ALLAN_COLUMNS,
    )
    return _write(df, path)


def read_allan_series(path: PathLike) -> AllanSeries:
    df = _read(path)
    missing = set(ALLAN_COLUMNS) - set(df.columns)
    if missing:
        raise AnalysisError(f"{path}: missing columns {sorted(missing)}")
    return AllanSeries(**{name: df[col].tolist() for name, col in zip(("taus", "adev", "ci_low", "ci_high"), ALLAN_COLUMNS)})


def write_records(path: PathLike, records: Sequence[ShotRecord]) -> Path:
    columns = list(ShotRecord.model_fields)
    return _write(pd.DataFrame([r.model_dump() for r in records], columns=columns), path)


def read_records(path: PathLike) -> List[ShotRecord]:
    df = _read(path)
    rows = []
    for row in df.to_dict(orient="records"):
        # empty cells come back as NaN
        rows.append(ShotRecord(**{k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in row.items()}))
    return rows


def write_photon_sweep(path: PathLike, rows: Sequence[PhotonSweepRow]) -> Path:
    return _write(pd.DataFrame([r.model_dump() for r in rows], columns=list(PhotonSweepRow.model_fields)), path)


def write_contrast_curve(path: PathLike, points: Sequence[ContrastPoint], x_label: str) -> Path:
    df = pd.DataFrame({x_label: [p.x for p in points], "contrast": [p.contrast for p in points]})
    return _write(df, path)


def write_light_shift(path: PathLike, rows: Sequence[LightShiftRow]) -> Path:
    return _write(pd.DataFrame([r.model_dump() for r in rows], columns=list(LightShiftRow.model_fields)), path)
