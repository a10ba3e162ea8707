# core/models.py
from __future__ import annotations

import math
from typing import Annotated, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

EnsembleLabel = Literal["A", "B"]
LatticeKind = Literal["1D", "2D"]


def wrap_phase(phase: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    return math.pi - (math.pi - phase) % (2.0 * math.pi)


# ---------- spin core ----------


class EnsembleConfig(BaseModel):
    """Static description of one atomic sub-ensemble."""

    atom_count: int = Field(30000, ge=1)
    initial_contrast: float = Field(0.82, gt=0.0, le=1.0)  # C_i share for this ensemble
    coherence_time: float = Field(4.5, gt=0.0)  # seconds
    label: EnsembleLabel = "A"


class CollectiveSpinState(BaseModel):
    """
    Gaussian collective spin of one ensemble.

    The mean spin points along (polar_angle, carrier_phase) with length
    contrast * N / 2; polar_angle = 0 is all atoms in the ground state
    (J_z = +N/2). Fluctuations live in the tangent plane spanned by the
    polar direction (equal to +z on the equator) and the azimuthal
    direction:
      - offset_*: conditional mean of the quantum fluctuation, atoms
      - signal_*: small accumulated rotation of the mean spin, radians
      - var_z / var_anti / cov_za: conditional covariance, atoms^2
    """

    model_config = ConfigDict(frozen=True)

    atom_count: int = Field(ge=1)
    contrast: float = Field(gt=0.0, le=1.0)
    polar_angle: float
    carrier_phase: float = 0.0
    offset_pol: float = 0.0
    offset_az: float = 0.0
    signal_pol: float = 0.0
    signal_az: float = 0.0
    var_z: float = Field(gt=0.0)
    var_anti: float = Field(gt=0.0)
    cov_za: float = 0.0

    @property
    def spin_length(self) -> float:
        return self.contrast * self.atom_count / 2.0

    @property
    def mean_jz(self) -> float:
        length = self.spin_length
        return length * math.cos(self.polar_angle) + math.sin(self.polar_angle) * (
            self.offset_pol + length * self.signal_pol
        )

    @property
    def jz_variance(self) -> float:
        """Conditional variance of the J_z projection."""
        return self.var_z * math.sin(self.polar_angle) ** 2

    @property
    def excitation(self) -> float:
        return min(1.0, max(0.0, 0.5 - self.mean_jz / self.atom_count))

    @property
    def mean_phase(self) -> float:
        return wrap_phase(self.carrier_phase + self.signal_az + self.offset_az / self.spin_length)


# ---------- cavity readout ----------


class CavityParams(BaseModel):
    """Atom-cavity coupling, probe budget and measurement back-action."""

    coupling_g: float = Field(2.0 * math.pi * 5.1e3, gt=0.0)  # rad/s
    detuning_dc: float = -2.0 * math.pi * 4.0e6  # rad/s
    probe_photons: float = Field(1000.0, ge=0.0)  # per 40 ms probe
    imprecision_coeff: float = Field(1223.5272, ge=0.0)  # atoms * sqrt(photons)
    scatter_coeff: float = Field(1.5e-5, ge=0.0)  # 1/photons
    echo_residual_coeff: Dict[LatticeKind, float] = Field(
        default_factory=lambda: {"1D": 6.0e-7, "2D": 1.539808e-7}
    )  # rad^2/photons^2 left after spin echo
    light_shift_coeff: Dict[LatticeKind, float] = Field(
        default_factory=lambda: {"1D": 1.2e-4, "2D": 4.0e-5}
    )  # rad^2/photons^2 without echo
    light_shift_mean_ratio: float = Field(1.0, ge=0.0)  # mean unechoed shift over its spread
    anti_squeeze_excess: float = Field(4.0, ge=1.0)
    pi_fidelity: float = Field(1.0, gt=0.0, le=1.0)
    probe_duration: float = Field(0.040, gt=0.0)  # seconds per population probe

    @field_validator("detuning_dc")
    @classmethod
    def _nonzero_detuning(cls, value: float) -> float:
        if value == 0.0:
            raise ValueError("detuning_dc must be non-zero")
        return value

    @field_validator("echo_residual_coeff", "light_shift_coeff")
    @classmethod
    def _both_lattices(cls, value: Dict[str, float]) -> Dict[str, float]:
        missing = {"1D", "2D"} - set(value)
        if missing:
            raise ValueError(f"missing lattice entries: {sorted(missing)}")
        if any(v < 0.0 for v in value.values()):
            raise ValueError("coefficients must be >= 0")
        return value


class LatticeConfig(BaseModel):
    dimensionality: LatticeKind = "2D"
    movable_depth: float = Field(19.0, gt=0.0)  # E_r
    transverse_depth: Optional[float] = Field(12.0, gt=0.0)  # E_r
    temperature: float = Field(0.5, gt=0.0)  # microkelvin
    transport_roundtrip_factor: float = Field((0.84 / 0.91) ** (1.0 / 16.0), gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _transverse_for_2d(self) -> "LatticeConfig":
        if self.dimensionality == "2D" and self.transverse_depth is None:
            raise ValueError("2D lattice requires transverse_depth")
        return self


class QndOutcome(BaseModel):
    """Result of one population probe."""

    model_config = ConfigDict(frozen=True)

    estimate: float  # atoms in the ground state
    imprecision: float  # 1 sigma, atoms; inf when no photons were used
    photons_used: float

    @model_validator(mode="after")
    def _finite_when_probed(self) -> "QndOutcome":
        if self.photons_used > 0 and not self.imprecision > 0:
            raise ValueError("imprecision must be positive when photons are used")
        return self


# ---------- noise ----------


class NoiseConfig(BaseModel):
    lo_white_fm: float = Field(4.25e-17, ge=0.0)  # fractional frequency / sqrt(Hz)
    lo_flicker_floor: float = Field(0.0, ge=0.0)  # fractional frequency
    flicker_octaves: int = Field(16, ge=1, le=62)
    drift_rate: float = Field(1.6e-6, ge=0.0)  # Hz/s, A relative to B
    static_offset: float = 0.0  # Hz
    technical_jz_noise: float = Field(0.0, ge=0.0)  # atoms
    rotation_jitter: float = Field(0.0723, ge=0.0)  # rad, per pulse, common to A and B
    pulse_phase_noise: float = Field(0.0, ge=0.0)  # rad^2 added to the phase quadrature per pulse


# ---------- sequence steps ----------


class _Step(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class Pulse(_Step):
    kind: Literal["pulse"] = "pulse"
    axis: Literal["x", "y", "z"]
    angle: float  # radians
    fidelity: float = Field(1.0, gt=0.0, le=1.0)
    target: Optional[EnsembleLabel] = None  # None rotates both ensembles


class DarkTime(_Step):
    kind: Literal["dark_time"] = "dark_time"
    duration: float = Field(ge=0.0)  # seconds


class QndEcho(_Step):
    kind: Literal["qnd_echo"] = "qnd_echo"
    target: EnsembleLabel
    photons: Optional[float] = Field(None, ge=0.0)  # None -> cavity.probe_photons
    label: Literal["pre", "final"] = "final"


class Transport(_Step):
    """Move `target` into the cavity and the other ensemble out."""

    kind: Literal["transport"] = "transport"
    target: EnsembleLabel
    distance: float = Field(140e-6, ge=0.0)  # meters
    duration: float = Field(2.5e-3, ge=0.0)  # seconds


class InitExcited(_Step):
    kind: Literal["init_excited"] = "init_excited"


class Readout(_Step):
    kind: Literal["readout"] = "readout"
    target: EnsembleLabel


SequenceStep = Annotated[
    Union[Pulse, DarkTime, QndEcho, Transport, InitExcited, Readout],
    Field(discriminator="kind"),
]


class PulseSequence(BaseModel):
    steps: List[SequenceStep] = Field(default_factory=list)


class ShotRecord(BaseModel):
    """Per-shot outcomes; jz_* are None when the program has no such measurement."""

    cycle_index: int = Field(ge=0)
    timestamp: float  # seconds since the start of the run
    jz_pre_A: Optional[float] = None
    jz_pre_B: Optional[float] = None
    jz_final_A: Optional[float] = None
    jz_final_B: Optional[float] = None
    excitation_A: float = Field(ge=0.0, le=1.0)
    excitation_B: float = Field(ge=0.0, le=1.0)
    contrast_A: float
    contrast_B: float
    duration: float = Field(0.0, ge=0.0)  # simulated program time, seconds


# ---------- analysis ----------


class SqueezingReport(BaseModel):
    beta_A: float
    beta_B: float
    R_linear: float
    R_db: float
    C_initial: float
    C_final: float
    C_effective: float
    xi2: float
    xi2_db: float
    xi2_wineland: float
    xi2_wineland_db: float


class AllanSeries(BaseModel):
    taus: List[float]
    adev: List[float]
    ci_low: List[float]
    ci_high: List[float]
    fitted_coefficient: Optional[float] = None  # white-FM a in a/sqrt(tau)

    @model_validator(mode="after")
    def _consistent(self) -> "AllanSeries":
        n = len(self.taus)
        if not (len(self.adev) == len(self.ci_low) == len(self.ci_high) == n):
            raise ValueError("taus, adev and confidence bounds must have equal length")
        if any(b <= a for a, b in zip(self.taus, self.taus[1:])):
            raise ValueError("taus must be strictly increasing")
        for lo, dev, hi in zip(self.ci_low, self.adev, self.ci_high):
            if dev < 0 or not lo <= dev <= hi:
                raise ValueError("require 0 <= ci_low <= adev <= ci_high")
        return self


class GainReport(BaseModel):
    """Gain of the squeezed comparison over the standard quantum limit, two conventions."""

    css_coefficient: float
    sss_coefficient: float
    sql_unit_contrast_coefficient: float
    instability_reduction_db: float
    variance_ratio_db: float
    css_gain_minus_contrast_db: float


class FullTimePrecision(BaseModel):
    total_time: float
    differential: float
    single_clock: float


class ModeResult(BaseModel):
    mode: Literal["css", "sss"]
    shots: int
    beta_A: float
    beta_B: float
    fitted_coefficient: float
    qpn_coefficient: float
    contrast_at_closing: float
    fitted_drift: float  # fractional frequency per second removed before the Allan fit
    full_time: FullTimePrecision
    squeezing: Optional[SqueezingReport] = None


class ComparisonSummary(BaseModel):
    scenario: str = "clock-comparison"
    seed: int
    preparation_contrast: float
    modes: Dict[str, ModeResult]
    gain: Optional[GainReport] = None


class PhotonSweepRow(BaseModel):
    photons: float
    R_linear: float
    R_db: float
    C_final: float
    C2: float
    xi2_db: float


class ContrastPoint(BaseModel):
    x: float  # dark time (s) or roundtrips
    contrast: float


class PhotonSweepSummary(BaseModel):
    scenario: str = "photon-sweep"
    seed: int
    preparation_contrast: float
    rows: List[PhotonSweepRow]
    optimal_photons: float
    optimal_xi2_db: float


class ContrastCurveSummary(BaseModel):
    scenario: str
    seed: int
    points: List[ContrastPoint]
    fitted_initial_contrast: Optional[float] = None
    fitted_coherence_time: Optional[float] = None  # s, contrast-decay only


class LightShiftRow(BaseModel):
    photons: float
    lattice: LatticeKind
    echo: bool
    contrast: float  # Ramsey contrast relative to an unprobed sequence
    phase: float  # rad, mean phase shift from the probe


class LightShiftSummary(BaseModel):
    scenario: str = "light-shift"
    seed: int
    rows: List[LightShiftRow]


class AnalyzeSummary(BaseModel):
    scenario: str = "analyze"
    input_path: str
    points: int
    cycle_time: float
    fitted_drift: float  # fractional frequency per second
    allan: AllanSeries


# ---------- scenario configuration ----------


class SequenceConfig(BaseModel):
    interrogation_time: float = Field(0.061, gt=0.0)  # T
    cycle_time: float = Field(3.8, gt=0.0)  # T_c
    roundtrips_during: int = Field(2, ge=0)
    roundtrips_after: int = Field(2, ge=1)  # B needs one roundtrip to reach the cavity
    final_photons: float = Field(10000.0, ge=0.0)
    transport_distance: float = Field(140e-6, ge=0.0)
    transport_duration: float = Field(2.5e-3, ge=0.0)
    clock_frequency: float = Field(429.228e12, gt=0.0)  # nu_0, Hz
    total_time: float = Field(2580.0, gt=0.0)  # full measurement time, s
    program: Optional[List[SequenceStep]] = None  # custom squeezed program

    @model_validator(mode="after")
    def _transports_fit(self) -> "SequenceConfig":
        if 2 * self.roundtrips_during * self.transport_duration > self.interrogation_time:
            raise ValueError("transports during the Ramsey window exceed interrogation_time")
        return self


class PhotonSweepConfig(BaseModel):
    photons: List[float] = Field(
        default_factory=lambda: [100, 200, 350, 500, 750, 1000, 1400, 1750, 2200, 2800, 3600, 4600, 6000]
    )
    trials: Optional[int] = Field(None, ge=2)  # None -> ScenarioConfig.trials

    @field_validator("photons")
    @classmethod
    def _positive(cls, value: List[float]) -> List[float]:
        if not value or any(p <= 0 for p in value):
            raise ValueError("photons must be a non-empty list of positive values")
        return value


class ContrastDecayConfig(BaseModel):
    dark_times: List[float] = Field(default_factory=lambda: [0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 4.5, 6.0])
    trials: Optional[int] = Field(None, ge=5)  # None -> ScenarioConfig.trials; the ellipse fit needs 5

    @field_validator("dark_times")
    @classmethod
    def _non_negative(cls, value: List[float]) -> List[float]:
        if len(value) < 2 or any(t < 0 for t in value):
            raise ValueError("need at least two non-negative dark times")
        return value


class TransportDecayConfig(BaseModel):
    initial_contrast: float = Field(0.91, gt=0.0, le=1.0)
    max_roundtrips: int = Field(16, ge=0)


class LightShiftConfig(BaseModel):
    photons: List[float] = Field(default_factory=lambda: [0, 25, 50, 100, 150, 200, 300, 400])
    lattices: List[LatticeKind] = Field(default_factory=lambda: ["1D", "2D"])
    atoms: int = Field(2000, ge=2)  # sampled atoms per point

    @field_validator("photons")
    @classmethod
    def _non_negative(cls, value: List[float]) -> List[float]:
        if not value or any(p < 0 for p in value):
            raise ValueError("photons must be a non-empty list of non-negative values")
        return value


class AnalyzeConfig(BaseModel):
    input_path: Optional[str] = None
    value_column: str = "value"


class ScenarioConfig(BaseModel):
    scenario: Literal["clock-comparison", "photon-sweep", "contrast-decay", "transport-decay", "light-shift", "analyze"]
    trials: int = Field(ge=1)
    seed: int = Field(ge=0, le=2**64 - 1)
    output_path: str = "results"
    mode: Literal["css", "sss", "both"] = "both"
    workers: int = Field(1, ge=1)
    ensemble_a: EnsembleConfig = Field(default_factory=lambda: EnsembleConfig(label="A"))
    ensemble_b: EnsembleConfig = Field(default_factory=lambda: EnsembleConfig(label="B"))
    cavity: CavityParams = Field(default_factory=CavityParams)
    lattice: LatticeConfig = Field(default_factory=LatticeConfig)
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    sequence: SequenceConfig = Field(default_factory=SequenceConfig)
    photon_sweep: PhotonSweepConfig = Field(default_factory=PhotonSweepConfig)
    contrast_decay: ContrastDecayConfig = Field(default_factory=ContrastDecayConfig)
    transport_decay: TransportDecayConfig = Field(default_factory=TransportDecayConfig)
    light_shift: LightShiftConfig = Field(default_factory=LightShiftConfig)
    analyze: AnalyzeConfig = Field(default_factory=AnalyzeConfig)

    @model_validator(mode="before")
    @classmethod
    def _default_labels(cls, data):
        if isinstance(data, dict):
            data = dict(data)
            for key, label in (("ensemble_a", "A"), ("ensemble_b", "B")):
                section = data.get(key)
                if isinstance(section, dict):
                    data[key] = {"label": label, **section}
        return data

    @model_validator(mode="after")
    def _labels(self) -> "ScenarioConfig":
        if self.ensemble_a.label != "A" or self.ensemble_b.label != "B":
            raise ValueError("ensemble_a/ensemble_b must carry labels A and B")
        return self
