# core/noise_models.py
"""Clock-laser (common mode) phase noise and differential frequency drift."""

from __future__ import annotations

import math

import numpy as np

from core.models import NoiseConfig

# spawn-key tag separating flicker draws from the per-shot streams
_FLICKER_STREAM = 0xF1C4


class NoiseModel:
    """
    Stochastic processes shared by both ensembles of one run.

    Stateless given (shot_index, seed): the flicker component is rebuilt
    from keyed streams on every call, so shots can be generated in any order.
    """

    def __init__(self, config: NoiseConfig, clock_frequency: float, seed: int = 0):
        if clock_frequency <= 0:
            raise ValueError("clock_frequency must be > 0")
        self.config = config
        self.clock_frequency = clock_frequency
        self.seed = seed

    def lo_phase(self, shot_index: int, interrogation_T: float, rng: np.random.Generator) -> float:
        """Laser phase (radians) picked up over `interrogation_T`, identical for A and B."""
        if interrogation_T <= 0:
            raise ValueError(f"interrogation_T must be > 0, got {interrogation_T}")
        omega = 2.0 * math.pi * self.clock_frequency
        phase = 0.0
        if self.config.lo_white_fm > 0:
            # white FM: phase diffuses with variance omega^2 * h0 * T / 2, h0 = lo_white_fm^2
            phase += float(rng.normal(0.0, omega * self.config.lo_white_fm * math.sqrt(interrogation_T / 2.0)))
        if self.config.lo_flicker_floor > 0:
            phase += omega * interrogation_T * self.flicker_offset(shot_index)
        return phase

    def flicker_offset(self, shot_index: int) -> float:
        """
        Fractional frequency offset of the laser for this shot.

        Sum of octave terms, term j holding one bounded value per block of
        2**j shots; the sum is scaled to the configured floor.
        """
        if self.config.lo_flicker_floor == 0:
            return 0.0
        octaves = self.config.flicker_octaves
        total = 0.0
        for j in range(octaves):
            seq = np.random.SeedSequence(self.seed, spawn_key=(_FLICKER_STREAM, j, shot_index >> j))
            total += float(np.random.default_rng(seq).uniform(-1.0, 1.0))
        # uniform(-1, 1) has variance 1/3
        return self.config.lo_flicker_floor * total * math.sqrt(3.0 / octaves)

    def differential_offset(self, time: float) -> float:
        """Frequency of ensemble A relative to B (Hz) at `time` seconds into the run."""
        if time < 0:
            raise ValueError(f"time must be >= 0, got {time}")
        return self.config.drift_rate * time + self.config.static_offset
