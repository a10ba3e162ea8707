# tests/conftest.py

from __future__ import annotations

import numpy as np
import pytest

from core.models import (
    CavityParams,
    EnsembleConfig,
    LatticeConfig,
    NoiseConfig,
    ScenarioConfig,
    SequenceConfig,
)
from core.noise_models import NoiseModel

CLOCK_FREQUENCY = 429.228e12


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def ensembles() -> tuple[EnsembleConfig, EnsembleConfig]:
    return EnsembleConfig(label="A"), EnsembleConfig(label="B")


@pytest.fixture
def cavity() -> CavityParams:
    return CavityParams()


@pytest.fixture
def lattice() -> LatticeConfig:
    return LatticeConfig()


@pytest.fixture
def sequence() -> SequenceConfig:
    return SequenceConfig()


@pytest.fixture
def quiet_noise() -> NoiseModel:
    """No laser noise, drift or pulse jitter."""
    return NoiseModel(NoiseConfig(lo_white_fm=0.0, drift_rate=0.0, rotation_jitter=0.0), CLOCK_FREQUENCY)


@pytest.fixture
def default_noise() -> NoiseModel:
    return NoiseModel(NoiseConfig(), CLOCK_FREQUENCY, seed=1)


@pytest.fixture
def scenario_factory(tmp_path):
    """Build a ScenarioConfig writing into a per-test directory."""

    def build(scenario: str = "clock-comparison", **updates) -> ScenarioConfig:
        data = {"scenario": scenario, "trials": 200, "seed": 7, "output_path": str(tmp_path / "out")}
        data.update(updates)
        return ScenarioConfig.model_validate(data)

    return build
