# core/errors.py

from __future__ import annotations

from typing import Iterable, List


class SimulatorError(Exception):
    """Base class for failures raised while running a scenario."""


class ProgramError(SimulatorError, ValueError):
    """A sequence program is structurally invalid (e.g. probing an ensemble outside the cavity)."""


class AnalysisError(SimulatorError, ValueError):
    """Estimator input is degenerate or too short."""


class ConfigError(SimulatorError):
    """
    Scenario configuration failed validation.

    `errors` holds every problem found, each formatted as
    "<dotted.field.path>: <message>".
    """

    def __init__(self, errors: Iterable[str]):
        self.errors: List[str] = list(errors)
        super().__init__("; ".join(self.errors) or "invalid configuration")
