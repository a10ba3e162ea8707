# core/sequence.py
"""
Protocol engine: runs a program of steps over the two ensembles A and B.

Time only advances in DarkTime, Transport and QndEcho steps; pulses are
instantaneous. Ensemble A starts in the cavity.
"""

from __future__ import annotations

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import curve_fit

from core.cavity_readout import jz_echo_measurement
from core.errors import AnalysisError, ProgramError
from core.models import (
    CavityParams,
    CollectiveSpinState,
    ContrastPoint,
    DarkTime,
    EnsembleConfig,
    InitExcited,
    LatticeConfig,
    NoiseConfig,
    Pulse,
    QndEcho,
    Readout,
    SequenceStep,
    ShotRecord,
    Transport,
)
from core.noise_models import NoiseModel
from core.programs import contrast_probe_program
from core.spin_state import accumulate_phase, dephase, excited_state, new_css, rotate, sample_jz, scale_contrast
from tools.trials import ShotStreams, derive_seed, run_trials

logger = logging.getLogger(__name__)

LABELS = ("A", "B")


def transport_decay(contrast: float, roundtrips: float, per_roundtrip_factor: float) -> float:
    """Contrast after `roundtrips` lattice roundtrips; one transport step is half a roundtrip."""
    if roundtrips < 0:
        raise ValueError(f"roundtrips must be >= 0, got {roundtrips}")
    return contrast * per_roundtrip_factor**roundtrips


def step_duration(step: SequenceStep, cavity: CavityParams) -> float:
    if isinstance(step, DarkTime):
        return step.duration
    if isinstance(step, Transport):
        return step.duration
    if isinstance(step, QndEcho):
        return 2.0 * cavity.probe_duration
    return 0.0


def program_duration(program: Sequence[SequenceStep], cavity: CavityParams) -> float:
    """Simulated wall time of a program: the sum of its step durations."""
    return math.fsum(step_duration(step, cavity) for step in program)


def validate_program(program: Sequence[SequenceStep]) -> None:
    """Raise ProgramError if a probe targets the ensemble outside the cavity or transports repeat."""
    in_cavity = "A"
    for index, step in enumerate(program):
        if isinstance(step, Transport):
            if step.target == in_cavity:
                raise ProgramError(f"step {index}: ensemble {step.target} is already in the cavity")
            in_cavity = step.target
        elif isinstance(step, QndEcho) and step.target != in_cavity:
            raise ProgramError(
                f"step {index}: QND probe on ensemble {step.target} while {in_cavity} is in the cavity"
            )


class _Shot:
    """Mutable bookkeeping for one execution of a program."""

    def __init__(
        self,
        ensembles: Tuple[EnsembleConfig, EnsembleConfig],
        cavity: CavityParams,
        lattice: LatticeConfig,
        noise: NoiseModel,
        streams: ShotStreams,
        shot_index: int,
        start_time: float,
    ):
        self.configs: Dict[str, EnsembleConfig] = dict(zip(LABELS, ensembles))
        self.states: Dict[str, CollectiveSpinState] = {x: new_css(c) for x, c in self.configs.items()}
        self.cavity = cavity
        self.lattice = lattice
        self.noise = noise
        self.streams = streams
        self.shot_index = shot_index
        self.start_time = start_time
        self.elapsed = 0.0
        self.last_pulse: Optional[float] = None
        self.in_cavity = "A"
        self.jz: Dict[Tuple[str, str], float] = {}
        self.readout: Dict[str, float] = {}
        self.pulse_contrast: Dict[str, float] = {}

    # ---- time evolution ----

    def advance(self, duration: float, drift: bool) -> None:
        if duration <= 0:
            return
        if drift:
            # offset is linear in time, so its value at the midpoint gives the exact integral
            offset = self.noise.differential_offset(self.start_time + self.elapsed + duration / 2.0)
            half_phase = math.pi * offset * duration
            self.states["A"] = accumulate_phase(self.states["A"], half_phase)
            self.states["B"] = accumulate_phase(self.states["B"], -half_phase)
        for label, state in self.states.items():
            self.states[label] = dephase(state, duration, self.configs[label].coherence_time)
        self.elapsed += duration

    # ---- steps ----

    def init_excited(self, step: InitExcited) -> None:
        self.states = {x: excited_state(c) for x, c in self.configs.items()}

    def pulse(self, step: Pulse) -> None:
        if self.last_pulse is not None and self.elapsed > self.last_pulse:
            lo = self.noise.lo_phase(self.shot_index, self.elapsed - self.last_pulse, self.streams.lo)
            for label in LABELS:
                self.states[label] = accumulate_phase(self.states[label], lo)
        self.last_pulse = self.elapsed

        jitter = 0.0
        if step.axis != "z" and self.noise.config.rotation_jitter > 0:
            jitter = float(self.streams.pulses.normal(0.0, self.noise.config.rotation_jitter))
        for label in LABELS if step.target is None else (step.target,):
            self.states[label] = rotate(
                self.states[label],
                step.axis,
                step.angle,
                step.fidelity,
                phase_noise_var=self.noise.config.pulse_phase_noise,
                quadrature_error=jitter,
            )
            self.pulse_contrast[label] = self.states[label].contrast

    def dark_time(self, step: DarkTime) -> None:
        self.advance(step.duration, drift=True)

    def transport(self, step: Transport) -> None:
        if step.target == self.in_cavity:
            raise ProgramError(f"ensemble {step.target} is already in the cavity")
        self.advance(step.duration, drift=True)
        one_way = transport_decay(1.0, 0.5, self.lattice.transport_roundtrip_factor)
        for label in LABELS:
            self.states[label] = scale_contrast(self.states[label], one_way)
        self.in_cavity = step.target

    def qnd_echo(self, step: QndEcho) -> None:
        if step.target != self.in_cavity:
            raise ProgramError(f"QND probe on ensemble {step.target} while {self.in_cavity} is in the cavity")
        photons = self.cavity.probe_photons if step.photons is None else step.photons
        estimate, state = jz_echo_measurement(
            self.states[step.target],
            photons,
            self.cavity.pi_fidelity,
            self.cavity,
            self.lattice,
            self.streams.ensemble(step.target),
        )
        if self.noise.config.technical_jz_noise > 0:
            estimate += float(self.streams.technical.normal(0.0, self.noise.config.technical_jz_noise))
        self.states[step.target] = state
        self.jz[(step.label, step.target)] = estimate
        self.advance(2.0 * self.cavity.probe_duration, drift=False)

    def readout_step(self, step: Readout) -> None:
        state = self.states[step.target]
        jz = sample_jz(state, self.streams.ensemble(step.target))
        self.readout[step.target] = min(1.0, max(0.0, 0.5 - jz / state.atom_count))

    # ---- result ----

    def record(self) -> ShotRecord:
        def excitation(label: str) -> float:
            return self.readout.get(label, self.states[label].excitation)

        def contrast(label: str) -> float:
            return self.pulse_contrast.get(label, self.states[label].contrast)

        return ShotRecord(
            cycle_index=self.shot_index,
            timestamp=self.start_time,
            jz_pre_A=self.jz.get(("pre", "A")),
            jz_pre_B=self.jz.get(("pre", "B")),
            jz_final_A=self.jz.get(("final", "A")),
            jz_final_B=self.jz.get(("final", "B")),
            excitation_A=excitation("A"),
            excitation_B=excitation("B"),
            contrast_A=contrast("A"),
            contrast_B=contrast("B"),
            duration=self.elapsed,
        )


_HANDLERS = {
    "init_excited": _Shot.init_excited,
    "pulse": _Shot.pulse,
    "dark_time": _Shot.dark_time,
    "transport": _Shot.transport,
    "qnd_echo": _Shot.qnd_echo,
    "readout": _Shot.readout_step,
}


def run_shot(
    program: Sequence[SequenceStep],
    ensembles: Tuple[EnsembleConfig, EnsembleConfig],
    cavity: CavityParams,
    lattice: LatticeConfig,
    noise: NoiseModel,
    rng: ShotStreams,
    shot_index: int = 0,
    cycle_time: float = 0.0,
) -> ShotRecord:
    """
    Execute `program` once on ensembles (A, B).

    Common laser phase is applied at every pulse, differential drift during
    dark times and transports. contrast_A/B in the record is the contrast at
    the last pulse (the Ramsey closing pulse for clock programs).
    """
    validate_program(program)
    shot = _Shot(ensembles, cavity, lattice, noise, rng, shot_index, shot_index * cycle_time)
    for step in program:
        _HANDLERS[step.kind](shot, step)
    return shot.record()


def run_shots(
    program: Sequence[SequenceStep],
    ensembles: Tuple[EnsembleConfig, EnsembleConfig],
    cavity: CavityParams,
    lattice: LatticeConfig,
    noise: NoiseModel,
    trials: int,
    seed: int,
    cycle_time: float = 0.0,
    workers: int = 1,
) -> List[ShotRecord]:
    """Run `trials` independent shots; shot i always draws from stream i of `seed`."""

    def one(index: int) -> ShotRecord:
        return run_shot(
            program, ensembles, cavity, lattice, noise, ShotStreams.for_shot(seed, index), index, cycle_time
        )

    return run_trials(one, trials, workers)


def preparation_contrast(
    css_program: Sequence[SequenceStep],
    ensembles: Tuple[EnsembleConfig, EnsembleConfig],
    cavity: CavityParams,
    lattice: LatticeConfig,
) -> Tuple[EnsembleConfig, EnsembleConfig]:
    """
    Return ensemble configs whose prepared contrast makes the CSS program's
    closing-pulse contrast equal each ensemble's configured C_i.

    Contrast bookkeeping is deterministic, so one noiseless shot suffices.
    """
    unit = tuple(c.model_copy(update={"initial_contrast": 1.0}) for c in ensembles)
    quiet = NoiseModel(NoiseConfig(lo_white_fm=0.0, drift_rate=0.0, rotation_jitter=0.0), 1.0)
    record = run_shot(css_program, unit, cavity, lattice, quiet, ShotStreams.for_shot(0, 0))
    prepared = []
    for config, factor in zip(ensembles, (record.contrast_A, record.contrast_B)):
        contrast = config.initial_contrast / factor
        if contrast > 1.0:
            raise ProgramError(
                f"ensemble {config.label}: C_i={config.initial_contrast} needs prepared contrast {contrast:.4f} > 1"
            )
        prepared.append(config.model_copy(update={"initial_contrast": contrast}))
    logger.info("prepared contrast A=%.6f B=%.6f", prepared[0].initial_contrast, prepared[1].initial_contrast)
    return prepared[0], prepared[1]


def closing_contrast(
    program: Sequence[SequenceStep],
    ensembles: Tuple[EnsembleConfig, EnsembleConfig],
    cavity: CavityParams,
    lattice: LatticeConfig,
) -> float:
    """Two-ensemble average contrast at the last pulse of `program`."""
    quiet = NoiseModel(NoiseConfig(lo_white_fm=0.0, drift_rate=0.0, rotation_jitter=0.0), 1.0)
    record = run_shot(program, ensembles, cavity, lattice, quiet, ShotStreams.for_shot(0, 0))
    return 0.5 * (record.contrast_A + record.contrast_B)


# ---------- coherence diagnostic ----------


def ellipse_contrast(excitation_a: np.ndarray, excitation_b: np.ndarray) -> float:
    """
    Two-ensemble average contrast from a least-squares conic fit to the
    P_A/P_B scatter.

    With P_X = 1/2 + (C_X/2) cos(phi + phi_X) the points lie on an ellipse
    whose half-extents along P_A and P_B are C_A/2 and C_B/2, whatever the
    distribution of the common phase phi along it. Returns 0 when the
    scatter does not fit an ellipse (no fringe left).
    """
    x = np.asarray(excitation_a, dtype=float)
    y = np.asarray(excitation_b, dtype=float)
    if x.shape != y.shape or x.size < 5:
        raise ValueError("need at least 5 paired excitation fractions for an ellipse fit")
    u, v = x - x.mean(), y - y.mean()
    scale = float(max(np.std(u), np.std(v)))
    if scale == 0.0:
        return 0.0
    u, v = u / scale, v / scale

    # a u^2 + b uv + c v^2 + d u + e v + f = 0, |(a..f)| = 1
    design = np.column_stack([u * u, u * v, v * v, u, v, np.ones_like(u)])
    a, b, c, d, e, f = np.linalg.svd(design, full_matrices=False)[2][-1]
    det = 4.0 * a * c - b * b
    if det <= 0.0:
        logger.debug("P_A/P_B scatter is not elliptical; contrast 0")
        return 0.0
    u0, v0 = np.linalg.solve([[2.0 * a, b], [b, 2.0 * c]], [-d, -e])
    k = -(a * u0 * u0 + b * u0 * v0 + c * v0 * v0 + d * u0 + e * v0 + f)
    half_a, half_b = 4.0 * c * k / det, 4.0 * a * k / det
    if half_a <= 0.0 or half_b <= 0.0:
        return 0.0
    return float(scale * (math.sqrt(half_a) + math.sqrt(half_b)))


def ramsey_contrast_curve(
    dark_times: Sequence[float],
    coherence_time: float,
    rng: int,
    trials: int,
    ensembles: Optional[Tuple[EnsembleConfig, EnsembleConfig]] = None,
    lattice: Optional[LatticeConfig] = None,
    noise: Optional[NoiseModel] = None,
    workers: int = 1,
) -> List[ContrastPoint]:
    """
    Monte Carlo two-ensemble Ramsey contrast versus dark time.

    `rng` is the master seed; dark time i uses the seed sequence
    (rng, i) so points are independent.
    """
    if trials < 5:
        raise ValueError(f"trials must be >= 5 for an ellipse fit, got {trials}")
    if ensembles is None:
        ensembles = (EnsembleConfig(label="A"), EnsembleConfig(label="B"))
    ensembles = tuple(c.model_copy(update={"coherence_time": coherence_time}) for c in ensembles)
    lattice = lattice or LatticeConfig()
    noise = noise or NoiseModel(NoiseConfig(drift_rate=0.0, rotation_jitter=0.0), 429.228e12, rng)
    cavity = CavityParams()

    points: List[ContrastPoint] = []
    for i, dark in enumerate(dark_times):
        master = derive_seed(rng, 0xC0DE, i)

        def one(index: int, dark: float = dark, master: int = master) -> ShotRecord:
            streams = ShotStreams.for_shot(master, index)
            phase = float(streams.pulses.uniform(0.0, 2.0 * math.pi))
            return run_shot(contrast_probe_program(dark, phase), ensembles, cavity, lattice, noise, streams, index)

        records = run_trials(one, trials, workers)
        pa = np.array([r.excitation_A for r in records])
        pb = np.array([r.excitation_B for r in records])
        points.append(ContrastPoint(x=float(dark), contrast=ellipse_contrast(pa, pb)))
        logger.debug("dark time %.3f s: contrast %.4f", dark, points[-1].contrast)
    return points


def fit_coherence_time(points: Sequence[ContrastPoint]) -> Tuple[float, float]:
    """Least-squares fit of C0 * exp(-t / tau); returns (C0, tau)."""
    t = np.array([p.x for p in points], dtype=float)
    c = np.array([p.contrast for p in points], dtype=float)
    if len(t) < 2:
        raise ValueError("need at least two points to fit a coherence time")
    guess = (max(float(c.max()), 1e-6), max(float(np.ptp(t)), 1e-3))
    try:
        (c0, tau), _ = curve_fit(
            lambda x, a, b: a * np.exp(-x / b), t, c, p0=guess, bounds=([0.0, 1e-9], [np.inf, np.inf]), maxfev=10000
        )
    except RuntimeError as exc:
        raise AnalysisError(f"coherence-time fit did not converge: {exc}") from exc
    return float(c0), float(tau)
