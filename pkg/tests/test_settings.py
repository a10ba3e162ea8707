# tests/test_settings.py

import math

import pytest

from config.settings import CONFIG_DIR_ENV, SHIPPED_CONFIG, default_config_path, load_config, validate_config
from core.errors import ConfigError


def test_empty_document_lists_every_required_field():
    config, errors = validate_config("")
    assert config is None
    fields = {error.split(":")[0] for error in errors}
    assert {"scenario", "trials", "seed"} <= fields


def test_field_errors_name_their_path():
    text = "scenario: clock-comparison\ntrials: 0\nseed: 1\nsequence:\n  interrogation_time: -1.0\n"
    config, errors = validate_config(text)
    assert config is None
    assert any(e.startswith("trials:") for e in errors)
    assert any(e.startswith("sequence.interrogation_time:") for e in errors)


def test_yaml_and_shape_errors():
    assert validate_config("trials: [1, 2")[1][0].startswith("<yaml>:")
    assert validate_config("- 1\n- 2\n")[1][0].startswith("<root>:")


def test_shipped_defaults_match_operating_point():
    config = load_config(SHIPPED_CONFIG)
    assert config.scenario == "clock-comparison"
    assert config.trials == 5000
    assert config.ensemble_a.label == "A" and config.ensemble_b.label == "B"
    assert config.ensemble_a.atom_count == 30000
    assert config.sequence.clock_frequency == pytest.approx(429.228e12)
    assert config.sequence.interrogation_time == 0.061
    assert config.cavity.coupling_g == pytest.approx(2 * math.pi * 5.1e3)
    assert config.cavity.detuning_dc == pytest.approx(-2 * math.pi * 4e6)
    assert config.lattice.transport_roundtrip_factor == pytest.approx((0.84 / 0.91) ** (1 / 16))
    assert config.noise.drift_rate == pytest.approx(1.6e-6)
    assert config.cavity.scatter_coeff == pytest.approx(1.5e-5)
    assert config.light_shift.lattices == ["1D", "2D"]
    assert config.cavity.light_shift_mean_ratio == 1.0


def test_overrides_replace_and_merge():
    text = "scenario: clock-comparison\ntrials: 10\nseed: 1\nnoise:\n  drift_rate: 0.0\n"
    config, errors = validate_config(text, {"trials": 99, "seed": None, "noise": {"lo_white_fm": 0.0}})
    assert errors == []
    assert config.trials == 99
    assert config.seed == 1
    assert config.noise.drift_rate == 0.0
    assert config.noise.lo_white_fm == 0.0


def test_config_dir_from_environment(tmp_path, monkeypatch):
    (tmp_path / "default_scenario.yaml").write_text("scenario: transport-decay\ntrials: 2\nseed: 3\n")
    monkeypatch.setenv(CONFIG_DIR_ENV, str(tmp_path))
    assert default_config_path() == tmp_path / "default_scenario.yaml"
    assert load_config().scenario == "transport-decay"
    monkeypatch.delenv(CONFIG_DIR_ENV)
    assert default_config_path() == SHIPPED_CONFIG


def test_load_config_raises_with_all_errors(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("scenario: nonsense\ntrials: -1\nseed: 1\n")
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert len(info.value.errors) == 2
    with pytest.raises(ConfigError, match="<file>"):
        load_config(tmp_path / "missing.yaml")
