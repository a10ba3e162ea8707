# config/settings.py

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import yaml
from dotenv import load_dotenv
from pydantic import ValidationError

from core.errors import ConfigError
from core.models import ScenarioConfig

logger = logging.getLogger(__name__)

# Load .env once (safe to call multiple times)
load_dotenv()

CONFIG_DIR_ENV = "SQUEEZE_CLOCK_CONFIG_DIR"
DEFAULT_CONFIG_NAME = "default_scenario.yaml"
SHIPPED_CONFIG = Path(__file__).resolve().parent / DEFAULT_CONFIG_NAME


def default_config_path() -> Path:
    """default_scenario.yaml in $SQUEEZE_CLOCK_CONFIG_DIR, else the copy shipped next to this module."""
    config_dir = os.getenv(CONFIG_DIR_ENV)
    if config_dir:
        return Path(config_dir) / DEFAULT_CONFIG_NAME
    return SHIPPED_CONFIG


def _field_path(loc: Tuple[Any, ...]) -> str:
    return ".".join(str(part) for part in loc) or "<root>"


def validate_config(
    raw_text: str,
    overrides: Optional[Mapping[str, Any]] = None,
) -> Tuple[Optional[ScenarioConfig], List[str]]:
    """
    Parse and validate a YAML scenario.

    Never raises for bad input: returns (config, []) on success and
    (None, ["field.path: message", ...]) listing every problem otherwise.
    Overrides replace top-level keys before validation.
    """
    try:
        raw = yaml.safe_load(raw_text) if raw_text else None
    except yaml.YAMLError as exc:
        return None, [f"<yaml>: {exc}"]
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        return None, [f"<root>: expected a mapping of sections, got {type(raw).__name__}"]

    data: Dict[str, Any] = dict(raw)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if isinstance(value, Mapping) and isinstance(data.get(key), dict):
            data[key] = {**data[key], **value}
        else:
            data[key] = value

    try:
        return ScenarioConfig.model_validate(data), []
    except ValidationError as exc:
        return None, [f"{_field_path(err['loc'])}: {err['msg']}" for err in exc.errors()]


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> ScenarioConfig:
    """Read and validate a scenario file; raises ConfigError with every field error."""
    path = Path(path) if path is not None else default_config_path()
    try:
        raw_text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"<file>: cannot read {path}: {exc.strerror or exc}"]) from exc

    config, errors = validate_config(raw_text, overrides)
    if config is None:
        raise ConfigError(errors)
    logger.info("loaded %s scenario from %s", config.scenario, path)
    return config
