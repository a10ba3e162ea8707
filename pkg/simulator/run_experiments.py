# simulator/run_experiments.py

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from config.settings import CONFIG_DIR_ENV, load_config
from core.errors import ConfigError, ProgramError, SimulatorError
from core.models import (
    AnalyzeSummary,
    ComparisonSummary,
    ContrastCurveSummary,
    LightShiftSummary,
    PhotonSweepSummary,
)
from core.programs import load_program
from simulator.scenarios import run_scenario

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

SIMULATED = ["clock-comparison", "photon-sweep", "contrast-decay", "transport-decay", "light-shift"]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"scenario YAML (default: ${CONFIG_DIR_ENV}/default_scenario.yaml)")
    common.add_argument("--seed", type=int, help="master seed, 0 .. 2**64-1")
    common.add_argument("--trials", type=int, help="shots per run")
    common.add_argument("--out", help="output directory")
    common.add_argument("--mode", choices=["css", "sss", "both"])
    common.add_argument("--workers", type=int, help="threads for the shot fan-out")
    common.add_argument("--plot", action="store_true", help="also write PNG figures")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(
        prog="python3 -m simulator.run_experiments",
        description="Monte Carlo comparison of two spin-squeezed optical-clock ensembles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", parents=[common], help="run a simulated scenario")
    simulate.add_argument("scenario", choices=SIMULATED)
    simulate.add_argument("--program", help="YAML squeezed program replacing the built-in one (clock-comparison)")
    simulate.add_argument("--program-name", help="entry to take from a file of named programs, e.g. sss")

    analyze = sub.add_parser("analyze", parents=[common], help="Allan analysis of a frequency-series CSV")
    analyze.add_argument("input", nargs="?", help="CSV with time_s and value columns")
    analyze.add_argument("--column", help="value column name (default: value)")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {
        "seed": args.seed,
        "trials": args.trials,
        "output_path": args.out,
        "mode": args.mode,
        "workers": args.workers,
    }
    if args.command == "simulate":
        overrides["scenario"] = args.scenario
        if args.program:
            steps = load_program(Path(args.program).read_text(encoding="utf-8"), name=args.program_name)
            overrides["sequence"] = {"program": [step.model_dump() for step in steps]}
    else:
        overrides["scenario"] = "analyze"
        section = {"input_path": args.input, "value_column": args.column}
        overrides["analyze"] = {k: v for k, v in section.items() if v is not None}
    return overrides


# ---------- console summaries ----------


def _sig(value: float) -> str:
    return f"{value:.4g}"


def _print_comparison(summary: ComparisonSummary) -> None:
    print("=== Squeezed Clock Comparison Summary ===\n")
    print(f"Prepared contrast: {_sig(summary.preparation_contrast)}\n")
    for mode, result in summary.modes.items():
        print(f"{mode.upper()}-{mode.upper()} ({result.shots} shots):")
        print(f"  • instability:      {_sig(result.fitted_coefficient)} / sqrt(tau)")
        print(f"  • QPN limit:        {_sig(result.qpn_coefficient)} / sqrt(tau)")
        print(f"  • closing contrast: {_sig(result.contrast_at_closing)}")
        print(f"  • beta A / B:       {_sig(result.beta_A)} / {_sig(result.beta_B)}")
        print(
            f"  • after {result.full_time.total_time:g} s: {_sig(result.full_time.differential)} "
            f"(single clock {_sig(result.full_time.single_clock)})"
        )
        if result.squeezing is not None:
            sq = result.squeezing
            print(f"  • R = {sq.R_db:.1f} dB, xi^2 = {sq.xi2_db:.1f} dB, xi_W^2 = {sq.xi2_wineland_db:.1f} dB")
        print()
    if summary.gain is not None:
        gain = summary.gain
        print(f"Instability reduction CSS -> SSS: {gain.instability_reduction_db:.1f} dB")
        print(f"Gain beyond SQL (variance ratio): {gain.variance_ratio_db:.1f} dB")
        print(f"Gain beyond SQL (CSS gain - contrast): {gain.css_gain_minus_contrast_db:.1f} dB")
    print("\n=========================================\n")


def _print_sweep(summary: PhotonSweepSummary) -> None:
    print("=== Photon Sweep Summary ===\n")
    print(f"{'photons':>9} {'R (dB)':>8} {'C^2':>8} {'xi^2 (dB)':>10}")
    for row in summary.rows:
        print(f"{row.photons:>9g} {row.R_db:>8.1f} {_sig(row.C2):>8} {row.xi2_db:>10.1f}")
    print(f"\nOptimum: {summary.optimal_photons:g} photons, xi^2 = {summary.optimal_xi2_db:.1f} dB")
    print("\n============================\n")


def _print_contrast(summary: ContrastCurveSummary) -> None:
    print(f"=== {summary.scenario} Summary ===\n")
    for point in summary.points:
        print(f"  • {point.x:g}: {_sig(point.contrast)}")
    if summary.fitted_coherence_time is not None:
        print(f"\nFitted coherence time: {_sig(summary.fitted_coherence_time)} s")
    print("\n==============================\n")


def _print_light_shift(summary: LightShiftSummary) -> None:
    print("=== Probe Light Shift Summary ===\n")
    print(f"{'photons':>9} {'lattice':>8} {'echo':>5} {'contrast':>9} {'phase (rad)':>12}")
    for row in summary.rows:
        echo = "yes" if row.echo else "no"
        print(f"{row.photons:>9g} {row.lattice:>8} {echo:>5} {row.contrast:>9.4f} {row.phase:>12.4f}")
    print("\n=================================\n")


def _print_analyze(summary: AnalyzeSummary) -> None:
    print("=== Frequency Series Analysis ===\n")
    print(f"Input: {summary.input_path} ({summary.points} points, T_c = {_sig(summary.cycle_time)} s)")
    print(f"Removed drift: {_sig(summary.fitted_drift)} /s")
    for tau, adev in zip(summary.allan.taus, summary.allan.adev):
        print(f"  • tau = {tau:g} s: {_sig(adev)}")
    print(f"\nWhite-FM fit: {_sig(summary.allan.fitted_coefficient or 0.0)} / sqrt(tau)")
    print("\n=================================\n")


_PRINTERS = {
    ComparisonSummary: _print_comparison,
    PhotonSweepSummary: _print_sweep,
    ContrastCurveSummary: _print_contrast,
    LightShiftSummary: _print_light_shift,
    AnalyzeSummary: _print_analyze,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    CLI entrypoint: validate the config, run the scenario, print a summary.

    Returns 0 on success, 2 for configuration errors, 3 for runtime errors.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        config = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        print("Invalid configuration:", file=sys.stderr)
        for error in exc.errors:
            print(f"  • {error}", file=sys.stderr)
        return EXIT_CONFIG
    except (ProgramError, OSError) as exc:
        print(f"Invalid configuration: program: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    print(f"\nRunning {config.scenario} (seed {config.seed}, {config.trials} trials)...\n")
    try:
        summary = run_scenario(config, plot=args.plot)
    except ConfigError as exc:
        for error in exc.errors:
            print(f"Invalid configuration: {error}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulatorError, OSError, ValueError) as exc:
        logger.debug("scenario failed", exc_info=True)
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    _PRINTERS[type(summary)](summary)
    print(f"Results written to {config.output_path}/")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
