import matplotlib

matplotlib.use("Agg")  # files only, never a window

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

# no timestamp/version metadata, so reruns give identical files
_PNG_METADATA = {"Software": None}


def _save(path):
    plt.grid(True, linestyle="--", alpha=0.6)
    plt.tight_layout()
    plt.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close()
    return path


def plot_allan_series(series_by_label, path):
    """
    Log-log Allan deviation with confidence bars and the fitted white-FM line.

    Parameters
    ----------
    series_by_label : dict[str, AllanSeries]
        e.g. {"css": ..., "sss": ...}
    path : str or Path
        Output PNG.
    """
    if not series_by_label:
        raise ValueError("No Allan series to plot.")

    sns.set_theme(style="whitegrid")
    plt.figure(figsize=(10, 6))
    palette = sns.color_palette("deep", len(series_by_label))

    for color, (label, series) in zip(palette, series_by_label.items()):
        taus = np.asarray(series.taus)
        adev = np.asarray(series.adev)
        errors = [adev - np.asarray(series.ci_low), np.asarray(series.ci_high) - adev]
        plt.errorbar(taus, adev, yerr=errors, fmt="o", color=color, capsize=3, label=label.upper())
        if series.fitted_coefficient:
            plt.plot(
                taus,
                series.fitted_coefficient / np.sqrt(taus),
                color=color,
                linestyle="-",
                alpha=0.7,
                label=f"{series.fitted_coefficient:.3g}/sqrt(tau)",
            )

    plt.xscale("log")
    plt.yscale("log")
    plt.title("Allan Deviation of the Differential Frequency")
    plt.xlabel("Averaging time tau (s)")
    plt.ylabel("Fractional frequency deviation")
    plt.legend(loc="best")
    return _save(path)


def plot_photon_sweep(rows, path):
    """
    Spin-noise reduction, contrast loss and squeezing parameter versus probe photons.

    Parameters
    ----------
    rows : list[PhotonSweepRow]
    path : str or Path
    """
    df = pd.DataFrame([r.model_dump() for r in rows])
    if df.empty:
        raise ValueError("No photon sweep rows to plot.")
    df["C2_db"] = 10.0 * np.log10(df["C2"])
    long = df.melt(id_vars="photons", value_vars=["R_db", "C2_db", "xi2_db"], var_name="quantity", value_name="dB")

    sns.set_theme(style="whitegrid")
    plt.figure(figsize=(10, 6))
    sns.lineplot(data=long, x="photons", y="dB", hue="quantity", marker="o")
    plt.axhline(0.0, color="black", linewidth=0.8)
    plt.xscale("log")
    plt.title("Squeezing versus Probe Photon Number")
    plt.xlabel("Probe photons")
    plt.ylabel("dB")
    return _save(path)


def plot_contrast_curve(points, path, x_label):
    """
    Ramsey contrast versus dark time or transport roundtrips.

    Parameters
    ----------
    points : list[ContrastPoint]
    path : str or Path
    x_label : str
    """
    df = pd.DataFrame([p.model_dump() for p in points])
    if df.empty:
        raise ValueError("No contrast points to plot.")

    sns.set_theme(style="whitegrid")
    plt.figure(figsize=(10, 6))
    sns.scatterplot(data=df, x="x", y="contrast", s=60, color="blue", edgecolor="black")
    plt.ylim([0.0, 1.0])
    plt.title("Ramsey Contrast")
    plt.xlabel(x_label)
    plt.ylabel("Contrast")
    return _save(path)


def plot_light_shift(rows, path):
    """
    Ramsey contrast and phase after one probe, with and without echo, per lattice.

    Parameters
    ----------
    rows : list[LightShiftRow]
    path : str or Path
    """
    df = pd.DataFrame([r.model_dump() for r in rows])
    if df.empty:
        raise ValueError("No light-shift rows to plot.")
    df["trace"] = df["lattice"] + np.where(df["echo"], " echo", " no echo")

    sns.set_theme(style="whitegrid")
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(10, 8), sharex=True)
    sns.lineplot(data=df, x="photons", y="contrast", hue="trace", marker="o", ax=top)
    sns.lineplot(data=df, x="photons", y="phase", hue="trace", marker="o", ax=bottom, legend=False)
    top.set_ylim([0.0, 1.05])
    top.set_title("Probe Light Shift in Ramsey Spectroscopy")
    top.set_ylabel("Relative contrast")
    bottom.set_ylabel("Phase shift (rad)")
    bottom.set_xlabel("Probe photons")
    return _save(path)
