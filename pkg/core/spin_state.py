# core/spin_state.py
"""
Gaussian collective-spin operations.

The mean spin direction is rotated exactly on the Bloch sphere; the
Gaussian fluctuation (offsets, small signal, covariance) is carried along
in the tangent plane by the 2x2 map between the old and new tangent frames.
"""

from __future__ import annotations

import math
from typing import Tuple

import numpy as np

from core.models import CollectiveSpinState, EnsembleConfig

AXES = {
    "x": np.array([1.0, 0.0, 0.0]),
    "y": np.array([0.0, 1.0, 0.0]),
    "z": np.array([0.0, 0.0, 1.0]),
}

_POLE_TOLERANCE = 1e-12

# contrast never reaches zero; the state model requires contrast > 0
MIN_CONTRAST = 1e-12


def qpn(atom_count: int) -> float:
    """Projection noise sqrt(N)/2 of an equatorial coherent spin state."""
    if atom_count < 0:
        raise ValueError(f"atom_count must be >= 0, got {atom_count}")
    return math.sqrt(atom_count) / 2.0


def new_css(config: EnsembleConfig) -> CollectiveSpinState:
    """Coherent spin state on the equator, mean spin along +x."""
    if config.atom_count < 1:
        raise ValueError("atom_count must be >= 1")
    quarter = config.atom_count / 4.0
    return CollectiveSpinState(
        atom_count=config.atom_count,
        contrast=config.initial_contrast,
        polar_angle=math.pi / 2.0,
        carrier_phase=0.0,
        var_z=quarter,
        var_anti=quarter,
    )


def excited_state(config: EnsembleConfig) -> CollectiveSpinState:
    """All atoms in the clock state (south pole)."""
    if config.atom_count < 1:
        raise ValueError("atom_count must be >= 1")
    quarter = config.atom_count / 4.0
    return CollectiveSpinState(
        atom_count=config.atom_count,
        contrast=config.initial_contrast,
        polar_angle=math.pi,
        carrier_phase=0.0,
        var_z=quarter,
        var_anti=quarter,
    )


# ---------- geometry ----------


def direction(state: CollectiveSpinState) -> np.ndarray:
    return _direction(state.polar_angle, state.carrier_phase)


def _direction(theta: float, phi: float) -> np.ndarray:
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def _tangent_frame(theta: float, phi: float) -> Tuple[np.ndarray, np.ndarray]:
    # e_pol equals +z on the equator, e_az points along increasing phase
    e_pol = np.array([-math.cos(theta) * math.cos(phi), -math.cos(theta) * math.sin(phi), math.sin(theta)])
    e_az = np.array([-math.sin(phi), math.cos(phi), 0.0])
    return e_pol, e_az


def _angles(vector: np.ndarray, fallback_phi: float) -> Tuple[float, float]:
    theta = math.acos(min(1.0, max(-1.0, float(vector[2]))))
    if math.hypot(vector[0], vector[1]) < _POLE_TOLERANCE:
        return theta, fallback_phi
    return theta, math.atan2(vector[1], vector[0])


def rotation_matrix(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix for a right-handed rotation about `axis`."""
    axis = axis / np.linalg.norm(axis)
    k = np.array([[0.0, -axis[2], axis[1]], [axis[2], 0.0, -axis[0]], [-axis[1], axis[0], 0.0]])
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def _apply_rotation(state: CollectiveSpinState, rotation: np.ndarray) -> CollectiveSpinState:
    theta, phi = state.polar_angle, state.carrier_phase
    e_pol, e_az = _tangent_frame(theta, phi)
    new_theta, new_phi = _angles(rotation @ _direction(theta, phi), phi)
    f_pol, f_az = _tangent_frame(new_theta, new_phi)
    r_pol, r_az = rotation @ e_pol, rotation @ e_az
    frame_map = np.array([[f_pol @ r_pol, f_pol @ r_az], [f_az @ r_pol, f_az @ r_az]])

    offset = frame_map @ np.array([state.offset_pol, state.offset_az])
    signal = frame_map @ np.array([state.signal_pol, state.signal_az])
    cov = frame_map @ np.array([[state.var_z, state.cov_za], [state.cov_za, state.var_anti]]) @ frame_map.T

    return state.model_copy(
        update={
            "polar_angle": new_theta,
            "carrier_phase": new_phi,
            "offset_pol": float(offset[0]),
            "offset_az": float(offset[1]),
            "signal_pol": float(signal[0]),
            "signal_az": float(signal[1]),
            "var_z": float(cov[0, 0]),
            "var_anti": float(cov[1, 1]),
            "cov_za": float(0.5 * (cov[0, 1] + cov[1, 0])),
        }
    )


# ---------- operations ----------


def rotate(
    state: CollectiveSpinState,
    axis: str,
    angle: float,
    fidelity: float = 1.0,
    phase_noise_var: float = 0.0,
    quadrature_error: float = 0.0,
) -> CollectiveSpinState:
    """
    Rotate the spin by `angle` about the lab `axis` ("x", "y" or "z").

    quadrature_error rotates the Gaussian about the (new) mean spin
    direction, mixing the two quadratures without moving the mean.
    phase_noise_var (rad^2) is added to the phase quadrature.
    """
    if not 0.0 < fidelity <= 1.0:
        raise ValueError(f"fidelity must be in (0, 1], got {fidelity}")
    if axis not in AXES:
        raise ValueError(f"unknown rotation axis {axis!r}")

    rotated = _apply_rotation(state, rotation_matrix(AXES[axis], angle))
    if quadrature_error:
        rotated = _apply_rotation(rotated, rotation_matrix(direction(rotated), quadrature_error))
    if phase_noise_var:
        rotated = rotated.model_copy(
            update={"var_anti": rotated.var_anti + phase_noise_var * rotated.spin_length**2}
        )
    return scale_contrast(rotated, fidelity)


def scale_contrast(state: CollectiveSpinState, factor: float) -> CollectiveSpinState:
    """
    Shrink the mean spin length by `factor`.

    The population already carried by the small signal (L * signal_pol)
    is kept: loss of coherence does not move atoms between levels.
    The contrast is floored at MIN_CONTRAST, so a factor of 0 (or one that
    underflowed) leaves a fully dephased but valid state.
    """
    if not 0.0 <= factor <= 1.0:
        raise ValueError(f"contrast factor must be in [0, 1], got {factor}")
    if factor == 1.0:
        return state
    contrast = max(state.contrast * factor, MIN_CONTRAST)
    applied = contrast / state.contrast
    return state.model_copy(update={"contrast": contrast, "signal_pol": state.signal_pol / applied})


def dephase(state: CollectiveSpinState, dark_time: float, coherence_time: float) -> CollectiveSpinState:
    if dark_time < 0:
        raise ValueError(f"dark_time must be >= 0, got {dark_time}")
    if coherence_time <= 0:
        raise ValueError(f"coherence_time must be > 0, got {coherence_time}")
    return scale_contrast(state, math.exp(-dark_time / coherence_time))


def accumulate_phase(state: CollectiveSpinState, phase: float) -> CollectiveSpinState:
    """Advance the azimuth of the mean spin by a small phase (radians)."""
    if not phase:
        return state
    return state.model_copy(update={"signal_az": state.signal_az + phase})


def sample_jz(state: CollectiveSpinState, rng: np.random.Generator) -> float:
    """Draw one J_z realization from the conditional Gaussian."""
    return float(rng.normal(state.mean_jz, math.sqrt(state.jz_variance)))
