# tests/test_plots.py

import pytest

from core.models import AllanSeries, ContrastPoint, LightShiftRow, PhotonSweepRow
from viz.plots import plot_allan_series, plot_contrast_curve, plot_light_shift, plot_photon_sweep

PNG_MAGIC = b"\x89PNG"


def _series(coefficient):
    taus = [3.8, 7.6, 15.2]
    adev = [coefficient / t**0.5 for t in taus]
    return AllanSeries(
        taus=taus,
        adev=adev,
        ci_low=[0.9 * d for d in adev],
        ci_high=[1.1 * d for d in adev],
        fitted_coefficient=coefficient,
    )


def test_allan_plot(tmp_path):
    path = plot_allan_series({"css": _series(1.18e-16), "sss": _series(8.0e-17)}, tmp_path / "allan.png")
    assert path.read_bytes().startswith(PNG_MAGIC)
    with pytest.raises(ValueError):
        plot_allan_series({}, tmp_path / "empty.png")


def test_photon_sweep_plot(tmp_path):
    rows = [
        PhotonSweepRow(photons=p, R_linear=r, R_db=db, C_final=c, C2=c2, xi2_db=x)
        for p, r, db, c, c2, x in [
            (500, 0.3, -5.2, 0.76, 0.70, -3.7),
            (1000, 0.19, -7.2, 0.71, 0.62, -5.1),
            (3000, 0.08, -11.0, 0.35, 0.15, -2.8),
        ]
    ]
    assert plot_photon_sweep(rows, tmp_path / "sweep.png").read_bytes().startswith(PNG_MAGIC)
    with pytest.raises(ValueError):
        plot_photon_sweep([], tmp_path / "empty.png")


def test_contrast_plot(tmp_path):
    points = [ContrastPoint(x=k, contrast=0.91 * 0.995**k) for k in range(17)]
    path = plot_contrast_curve(points, tmp_path / "transport.png", "Transport roundtrips")
    assert path.read_bytes().startswith(PNG_MAGIC)


def test_light_shift_plot(tmp_path):
    rows = [
        LightShiftRow(photons=p, lattice=kind, echo=echo, contrast=c, phase=ph)
        for p in (0, 100, 200)
        for kind, c, ph in (("1D", 0.55, 1.1), ("2D", 0.82, 0.63))
        for echo in (True, False)
    ]
    assert plot_light_shift(rows, tmp_path / "light.png").read_bytes().startswith(PNG_MAGIC)
    with pytest.raises(ValueError):
        plot_light_shift([], tmp_path / "empty.png")
