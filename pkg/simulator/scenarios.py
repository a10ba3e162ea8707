# simulator/scenarios.py

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel

from core.cavity_readout import probe_ramsey_response
from core.errors import AnalysisError, ConfigError
from core.models import (
    AllanSeries,
    AnalyzeSummary,
    ComparisonSummary,
    ContrastCurveSummary,
    ContrastPoint,
    EnsembleConfig,
    LightShiftRow,
    LightShiftSummary,
    ModeResult,
    PhotonSweepRow,
    PhotonSweepSummary,
    ScenarioConfig,
    SequenceStep,
    ShotRecord,
)
from core.noise_models import NoiseModel
from core.programs import comparison_program, dump_programs, ramsey_program, repeated_measurement_program
from core.sequence import (
    closing_contrast,
    fit_coherence_time,
    preparation_contrast,
    ramsey_contrast_curve,
    run_shots,
    validate_program,
)
from tools import series_io
from tools.allan import allan_deviation, fit_linear_drift, qpn_instability
from tools.estimators import (
    differential_betas,
    ensemble_betas,
    frequency_series,
    full_time_precision,
    gain_beyond_sql,
    spin_noise_reduction,
    squeezing_metrics,
)
from tools.trials import derive_seed
from viz.plots import plot_allan_series, plot_contrast_curve, plot_light_shift, plot_photon_sweep

logger = logging.getLogger(__name__)

MODES = ("css", "sss")

# spawn-key tags for independent sub-runs of one master seed
_MODE_STREAM = 0x30DE
_REFERENCE_STREAM = 0x5EF
_SWEEP_STREAM = 0x9407
_LIGHT_SHIFT_STREAM = 0x1165


def _ensembles(config: ScenarioConfig) -> Tuple[EnsembleConfig, EnsembleConfig]:
    return config.ensemble_a, config.ensemble_b


def _atom_counts(config: ScenarioConfig) -> Tuple[int, int]:
    return config.ensemble_a.atom_count, config.ensemble_b.atom_count


def _initial_contrast(config: ScenarioConfig) -> float:
    return 0.5 * (config.ensemble_a.initial_contrast + config.ensemble_b.initial_contrast)


def _write_summary(out: Path, summary: BaseModel) -> Path:
    path = out / "summary.json"
    path.write_text(summary.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


# ---------- clock comparison ----------


def _comparison_programs(config: ScenarioConfig) -> Dict[str, List[SequenceStep]]:
    sequence = config.sequence
    sss = list(sequence.program) if sequence.program is not None else comparison_program(sequence, squeezed=True)
    programs = {"css": comparison_program(sequence, squeezed=False), "sss": sss}
    for program in programs.values():
        validate_program(program)
    return programs


def _reference_program(mode: str, config: ScenarioConfig) -> List[SequenceStep]:
    # R is measured without Ramsey pulses so the clock signal stays out of J_z
    if mode == "sss":
        return repeated_measurement_program(config.cavity.probe_photons, config.sequence)
    return repeated_measurement_program(config.sequence.final_photons, config.sequence, with_pre=False)


def _run_mode(
    mode: str,
    program: List[SequenceStep],
    prepared: Tuple[EnsembleConfig, EnsembleConfig],
    config: ScenarioConfig,
    noise: NoiseModel,
) -> Tuple[ModeResult, List[ShotRecord], np.ndarray, np.ndarray, AllanSeries]:
    sequence = config.sequence
    counts = _atom_counts(config)
    mode_index = MODES.index(mode)

    # 1) Monte Carlo shots of the comparison program
    records = run_shots(
        program,
        prepared,
        config.cavity,
        config.lattice,
        noise,
        config.trials,
        derive_seed(config.seed, _MODE_STREAM, mode_index),
        cycle_time=sequence.cycle_time,
        workers=config.workers,
    )

    # 2) Differential frequency, drift removal, Allan deviation
    betas = differential_betas(records, counts)
    times, freq = frequency_series(records, betas, counts, sequence.clock_frequency, sequence.interrogation_time)
    offset, slope = fit_linear_drift(freq, times)
    allan = allan_deviation(freq - (offset + slope * times), sequence.cycle_time)

    # 3) Squeezing bookkeeping from a reference run without Ramsey pulses
    reference = run_shots(
        _reference_program(mode, config),
        prepared,
        config.cavity,
        config.lattice,
        noise,
        config.trials,
        derive_seed(config.seed, _REFERENCE_STREAM, mode_index),
        workers=config.workers,
    )
    ref_betas = ensemble_betas(reference)
    R = spin_noise_reduction(reference, counts[0], counts[1], ref_betas)
    closing = float(np.mean([0.5 * (r.contrast_A + r.contrast_B) for r in records]))
    squeezing = squeezing_metrics(R, _initial_contrast(config), min(closing, 1.0), *ref_betas)

    n_mean = 0.5 * (counts[0] + counts[1])
    result = ModeResult(
        mode=mode,
        shots=len(records),
        beta_A=betas[0],
        beta_B=betas[1],
        fitted_coefficient=allan.fitted_coefficient,
        qpn_coefficient=qpn_instability(
            n_mean, closing, sequence.interrogation_time, sequence.cycle_time, sequence.clock_frequency
        ),
        contrast_at_closing=closing,
        fitted_drift=slope,
        full_time=full_time_precision(allan.fitted_coefficient, sequence.total_time),
        squeezing=squeezing,
    )
    logger.info(
        "%s: %.4g/sqrt(tau) (QPN %.4g), R=%.2f dB, C_closing=%.4f",
        mode.upper(),
        result.fitted_coefficient,
        result.qpn_coefficient,
        squeezing.R_db,
        closing,
    )
    return result, records, times, freq, allan


def run_clock_comparison(config: ScenarioConfig, out: Path, plot: bool = False) -> ComparisonSummary:
    sequence = config.sequence
    programs = _comparison_programs(config)
    (out / "programs.yaml").write_text(dump_programs(programs), encoding="utf-8")

    prepared = preparation_contrast(programs["css"], _ensembles(config), config.cavity, config.lattice)
    noise = NoiseModel(config.noise, sequence.clock_frequency, seed=config.seed)

    modes = MODES if config.mode == "both" else (config.mode,)
    results: Dict[str, ModeResult] = {}
    allan_by_mode = {}
    for mode in modes:
        result, records, times, freq, allan = _run_mode(mode, programs[mode], prepared, config, noise)
        results[mode] = result
        allan_by_mode[mode] = allan
        series_io.write_records(out / f"shots_{mode}.csv", records)
        series_io.write_frequency_series(out / f"frequency_{mode}.csv", times, freq)
        series_io.write_allan_series(out / f"allan_{mode}.csv", allan)

    gain = None
    if len(results) == 2:
        n_mean = 0.5 * sum(_atom_counts(config))
        gain = gain_beyond_sql(
            results["css"].fitted_coefficient,
            results["sss"].fitted_coefficient,
            qpn_instability(n_mean, 1.0, sequence.interrogation_time, sequence.cycle_time, sequence.clock_frequency),
            _initial_contrast(config),
        )

    if plot:
        plot_allan_series(allan_by_mode, out / "allan.png")

    return ComparisonSummary(
        seed=config.seed,
        preparation_contrast=0.5 * (prepared[0].initial_contrast + prepared[1].initial_contrast),
        modes=results,
        gain=gain,
    )


# ---------- photon sweep ----------


def run_photon_sweep(config: ScenarioConfig, out: Path, plot: bool = False) -> PhotonSweepSummary:
    sequence = config.sequence
    trials = config.photon_sweep.trials or config.trials
    css = comparison_program(sequence, squeezed=False)
    prepared = preparation_contrast(css, _ensembles(config), config.cavity, config.lattice)
    noise = NoiseModel(config.noise, sequence.clock_frequency, seed=config.seed)
    c_i = _initial_contrast(config)

    rows: List[PhotonSweepRow] = []
    for i, photons in enumerate(config.photon_sweep.photons):
        # 1) R from repeated measurements at this photon number
        records = run_shots(
            repeated_measurement_program(photons, sequence),
            prepared,
            config.cavity,
            config.lattice,
            noise,
            trials,
            derive_seed(config.seed, _SWEEP_STREAM, i),
            workers=config.workers,
        )
        R = spin_noise_reduction(records, *_atom_counts(config))

        # 2) closing contrast of the clock program squeezed with this photon number
        c_f = closing_contrast(
            comparison_program(sequence, squeezed=True, pre_photons=photons),
            prepared,
            config.cavity,
            config.lattice,
        )
        report = squeezing_metrics(R, c_i, c_f)
        rows.append(
            PhotonSweepRow(
                photons=photons,
                R_linear=report.R_linear,
                R_db=report.R_db,
                C_final=c_f,
                C2=report.C_effective**2,
                xi2_db=report.xi2_db,
            )
        )
        logger.info("photons %g: R=%.2f dB C^2=%.3f xi^2=%.2f dB", photons, report.R_db, rows[-1].C2, report.xi2_db)

    series_io.write_photon_sweep(out / "photon_sweep.csv", rows)
    if plot:
        plot_photon_sweep(rows, out / "photon_sweep.png")

    best = min(rows, key=lambda r: r.xi2_db)
    return PhotonSweepSummary(
        seed=config.seed,
        preparation_contrast=0.5 * (prepared[0].initial_contrast + prepared[1].initial_contrast),
        rows=rows,
        optimal_photons=best.photons,
        optimal_xi2_db=best.xi2_db,
    )


# ---------- coherence and transport diagnostics ----------


def run_contrast_decay(config: ScenarioConfig, out: Path, plot: bool = False) -> ContrastCurveSummary:
    points = ramsey_contrast_curve(
        config.contrast_decay.dark_times,
        config.ensemble_a.coherence_time,
        config.seed,
        config.contrast_decay.trials or config.trials,
        ensembles=_ensembles(config),
        lattice=config.lattice,
        noise=NoiseModel(config.noise, config.sequence.clock_frequency, seed=config.seed),
        workers=config.workers,
    )
    try:
        c0, tau = fit_coherence_time(points)
        logger.info("fitted coherence time %.3f s (C0=%.3f)", tau, c0)
    except AnalysisError as exc:
        logger.warning("no coherence time: %s", exc)
        c0 = tau = None

    series_io.write_contrast_curve(out / "contrast_decay.csv", points, "dark_time_s")
    if plot:
        plot_contrast_curve(points, out / "contrast_decay.png", "Dark time (s)")
    return ContrastCurveSummary(
        scenario="contrast-decay",
        seed=config.seed,
        points=points,
        fitted_initial_contrast=c0,
        fitted_coherence_time=tau,
    )


def run_transport_decay(config: ScenarioConfig, out: Path, plot: bool = False) -> ContrastCurveSummary:
    """
    Ramsey contrast after k transport roundtrips at a fixed dark time,
    normalised to the k = 0 contrast so dephasing divides out.
    """
    settings = config.transport_decay
    sequence = config.sequence
    dark_time = 2 * settings.max_roundtrips * sequence.transport_duration
    ensembles = tuple(
        e.model_copy(update={"initial_contrast": settings.initial_contrast}) for e in _ensembles(config)
    )

    raw = [
        closing_contrast(ramsey_program(dark_time, k, sequence), ensembles, config.cavity, config.lattice)
        for k in range(settings.max_roundtrips + 1)
    ]
    points = [ContrastPoint(x=float(k), contrast=settings.initial_contrast * c / raw[0]) for k, c in enumerate(raw)]
    logger.info("contrast %.4f -> %.4f over %d roundtrips", points[0].contrast, points[-1].contrast, settings.max_roundtrips)

    series_io.write_contrast_curve(out / "transport_decay.csv", points, "roundtrips")
    if plot:
        plot_contrast_curve(points, out / "transport_decay.png", "Transport roundtrips")
    return ContrastCurveSummary(scenario="transport-decay", seed=config.seed, points=points)


def run_light_shift(config: ScenarioConfig, out: Path, plot: bool = False) -> LightShiftSummary:
    """
    Ramsey contrast and phase after one probe block inside the dark time,
    with and without spin echo, per lattice and photon number.
    """
    settings = config.light_shift
    rows: List[LightShiftRow] = []
    for i, photons in enumerate(settings.photons):
        for j, kind in enumerate(settings.lattices):
            lattice = config.lattice.model_copy(update={"dimensionality": kind})
            for echo in (True, False):
                rng = np.random.default_rng(derive_seed(config.seed, _LIGHT_SHIFT_STREAM, i, j, int(echo)))
                contrast, phase = probe_ramsey_response(lattice, photons, rng, config.cavity, echo, settings.atoms)
                rows.append(LightShiftRow(photons=photons, lattice=kind, echo=echo, contrast=contrast, phase=phase))
                logger.debug("photons %g %s echo=%s: contrast %.4f phase %.4f", photons, kind, echo, contrast, phase)

    series_io.write_light_shift(out / "light_shift.csv", rows)
    if plot:
        plot_light_shift(rows, out / "light_shift.png")
    return LightShiftSummary(seed=config.seed, rows=rows)


# ---------- external series ----------


def run_analyze(config: ScenarioConfig, out: Path, plot: bool = False) -> AnalyzeSummary:
    source = config.analyze.input_path
    if not source:
        raise ConfigError(["analyze.input_path: required for the analyze scenario"])
    times, values = series_io.read_frequency_series(source, config.analyze.value_column)
    cycle = series_io.infer_cycle_time(times)
    offset, slope = fit_linear_drift(values, times)
    allan = allan_deviation(values - (offset + slope * times), cycle)

    series_io.write_allan_series(out / "allan.csv", allan)
    if plot:
        plot_allan_series({"input": allan}, out / "allan.png")
    return AnalyzeSummary(input_path=str(source), points=int(values.size), cycle_time=cycle, fitted_drift=slope, allan=allan)


_RUNNERS = {
    "clock-comparison": run_clock_comparison,
    "photon-sweep": run_photon_sweep,
    "contrast-decay": run_contrast_decay,
    "transport-decay": run_transport_decay,
    "light-shift": run_light_shift,
    "analyze": run_analyze,
}


def run_scenario(config: ScenarioConfig, plot: bool = False) -> BaseModel:
    """
    Run the configured scenario, write its artifacts under config.output_path
    and return the summary that was written to summary.json.
    """
    runner = _RUNNERS.get(config.scenario)
    if runner is None:
        raise ConfigError([f"scenario: unknown scenario {config.scenario!r}"])
    out = Path(config.output_path)
    out.mkdir(parents=True, exist_ok=True)
    logger.info("running %s (seed %d, %d trials) into %s", config.scenario, config.seed, config.trials, out)

    summary = runner(config, out, plot)
    path = _write_summary(out, summary)
    logger.info("wrote %s", path)
    return summary
