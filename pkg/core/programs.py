# core/programs.py
"""Builders for the standard pulse programs, plus YAML load/dump of custom ones."""

from __future__ import annotations

import math
from typing import List, Mapping, Optional, Sequence

import yaml
from pydantic import TypeAdapter, ValidationError

from core.errors import ProgramError
from core.models import (
    DarkTime,
    InitExcited,
    Pulse,
    QndEcho,
    Readout,
    SequenceConfig,
    SequenceStep,
    Transport,
)

_STEP_LIST = TypeAdapter(List[SequenceStep])

HALF_PI = math.pi / 2.0


def _shuttle(first: str, count: int, sequence: SequenceConfig) -> List[Transport]:
    """`count` one-way transports, alternating targets starting with `first`."""
    other = {"A": "B", "B": "A"}
    steps: List[Transport] = []
    target = first
    for _ in range(count):
        steps.append(
            Transport(target=target, distance=sequence.transport_distance, duration=sequence.transport_duration)
        )
        target = other[target]
    return steps


def _half_dark(sequence: SequenceConfig) -> float:
    moving = 2 * sequence.roundtrips_during * sequence.transport_duration
    return (sequence.interrogation_time - moving) / 2.0


def _echo_pair(label: str, photons: Optional[float], sequence: SequenceConfig) -> List[SequenceStep]:
    # A is in the cavity; measure A, swap in B, measure B, bring A back
    return [
        QndEcho(target="A", photons=photons, label=label),
        *_shuttle("B", 1, sequence),
        QndEcho(target="B", photons=photons, label=label),
        *_shuttle("A", 1, sequence),
    ]


def _ramsey_window(sequence: SequenceConfig) -> List[SequenceStep]:
    half = _half_dark(sequence)
    return [
        DarkTime(duration=half),
        *_shuttle("B", 2 * sequence.roundtrips_during, sequence),
        DarkTime(duration=half),
    ]


def comparison_program(
    sequence: SequenceConfig,
    squeezed: bool = True,
    pre_photons: Optional[float] = None,
) -> List[SequenceStep]:
    """
    Two-ensemble clock comparison.

    Both ensembles start in |e>, are rotated onto the equator, optionally
    squeezed by a pre-measurement of J_z, then run a Ramsey sequence about
    x with the configured transports in the middle of the dark time. J_z is
    measured on A and B after the closing pulse.

    `pre_photons` None means the cavity's probe_photons. The unsqueezed
    variant keeps the swap transports so both variants see the same
    transport losses.
    """
    steps: List[SequenceStep] = [InitExcited(), Pulse(axis="y", angle=HALF_PI)]
    if squeezed:
        steps += _echo_pair("pre", pre_photons, sequence)
    else:
        steps += _shuttle("B", 2, sequence)
    steps.append(Pulse(axis="x", angle=-HALF_PI))
    steps += _ramsey_window(sequence)
    steps.append(Pulse(axis="x", angle=-HALF_PI))
    steps += _echo_pair("final", sequence.final_photons, sequence)
    steps += _shuttle("B", 2 * (sequence.roundtrips_after - 1), sequence)
    return steps


def repeated_measurement_program(
    photons: float,
    sequence: SequenceConfig,
    with_pre: bool = True,
) -> List[SequenceStep]:
    """
    Two J_z measurements with the same photon number separated by the
    Ramsey dark time, no Ramsey pulses.

    The phase quadrature is not rotated into J_z, so the second measurement
    sees the first one through the spin-echo inversion and the optimal
    regression coefficient comes out negative. `with_pre=False` keeps only
    the second measurement (unsqueezed reference) with the same transports.
    """
    if photons <= 0:
        raise ProgramError(f"photons must be > 0, got {photons}")
    steps: List[SequenceStep] = [InitExcited(), Pulse(axis="y", angle=HALF_PI)]
    steps += _echo_pair("pre", photons, sequence) if with_pre else _shuttle("B", 2, sequence)
    steps += _ramsey_window(sequence)
    steps += _echo_pair("final", photons, sequence)
    steps += _shuttle("B", 2 * (sequence.roundtrips_after - 1), sequence)
    return steps


def ramsey_program(dark_time: float, roundtrips: int, sequence: SequenceConfig) -> List[SequenceStep]:
    """Plain two-ensemble Ramsey sequence with `roundtrips` transports centred in the dark time."""
    if roundtrips < 0:
        raise ProgramError(f"roundtrips must be >= 0, got {roundtrips}")
    half = (dark_time - 2 * roundtrips * sequence.transport_duration) / 2.0
    if half < 0:
        raise ProgramError(f"{roundtrips} roundtrips do not fit into a {dark_time} s dark time")
    return [
        InitExcited(),
        Pulse(axis="y", angle=HALF_PI),
        DarkTime(duration=half),
        *_shuttle("B", 2 * roundtrips, sequence),
        DarkTime(duration=half),
        Pulse(axis="y", angle=HALF_PI),
    ]


def contrast_probe_program(dark_time: float, phase: float, differential_phase: float = HALF_PI) -> List[SequenceStep]:
    """
    Ramsey sequence closed with a given common phase, ending in a destructive
    readout of both ensembles. A is advanced by `differential_phase` so the
    P_A/P_B scatter opens into an ellipse.
    """
    return [
        InitExcited(),
        Pulse(axis="y", angle=HALF_PI),
        DarkTime(duration=dark_time),
        Pulse(axis="z", angle=phase),
        Pulse(axis="z", angle=differential_phase, target="A"),
        Pulse(axis="y", angle=HALF_PI),
        Readout(target="A"),
        Readout(target="B"),
    ]


def load_program(text: str, name: Optional[str] = None) -> List[SequenceStep]:
    """
    Parse a YAML program: a list of steps, a mapping with a `steps` key,
    or (with `name`) one entry of a mapping of named programs.
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ProgramError(f"unreadable program: {exc}") from exc
    if name is not None:
        if not isinstance(raw, dict) or name not in raw:
            raise ProgramError(f"no program named {name!r}")
        raw = raw[name]
    if raw is None:
        return []
    if isinstance(raw, dict):
        raw = raw.get("steps", [])
    try:
        return _STEP_LIST.validate_python(raw)
    except ValidationError as exc:
        raise ProgramError(f"invalid program: {exc}") from exc


def _plain(program: Sequence[SequenceStep]) -> List[dict]:
    return [step.model_dump() for step in program]


def dump_program(program: Sequence[SequenceStep]) -> str:
    return yaml.safe_dump({"steps": _plain(program)}, sort_keys=False)


def dump_programs(programs: Mapping[str, Sequence[SequenceStep]]) -> str:
    return yaml.safe_dump({name: _plain(program) for name, program in programs.items()}, sort_keys=False)
