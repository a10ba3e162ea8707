# core/cavity_readout.py
"""Cavity-dispersive QND readout: population probes, J_z spin-echo measurement, light shifts."""

from __future__ import annotations

import math
from typing import Optional, Tuple, Union

import numpy as np

from core.models import CavityParams, CollectiveSpinState, LatticeConfig, QndOutcome
from core.spin_state import rotate, sample_jz, scale_contrast


def dispersive_shift(n_ground: float, params: CavityParams) -> float:
    """Cavity resonance shift N_g * g^2 / delta_c in rad/s (signed)."""
    if params.detuning_dc == 0.0:
        raise ValueError("detuning_dc must be non-zero")
    return n_ground * params.coupling_g**2 / params.detuning_dc


def measurement_imprecision(n_photons: float, params: CavityParams) -> float:
    """Photon-shot-noise limited atom-number imprecision k / sqrt(n)."""
    if n_photons <= 0:
        raise ValueError(f"n_photons must be > 0 for a finite imprecision, got {n_photons}")
    return params.imprecision_coeff / math.sqrt(n_photons)


def echo_residual_coeff(params: CavityParams, lattice: LatticeConfig) -> float:
    return params.echo_residual_coeff[lattice.dimensionality]


def _condition(
    state: CollectiveSpinState,
    observed_jz: float,
    noise_var: float,
    contrast_after: float,
    excess: float,
) -> CollectiveSpinState:
    # Gaussian update for a J_z observation; J_z sees the polar quadrature through sin(theta)
    s = math.sin(state.polar_angle)
    var_z, cov, var_anti = state.var_z, state.cov_za, state.var_anti
    total = s * s * var_z + noise_var
    innovation = observed_jz - state.mean_jz

    new_var_z = var_z - (s * var_z) ** 2 / total
    new_cov = cov - s * s * var_z * cov / total
    new_var_anti = var_anti - (s * cov) ** 2 / total

    n = state.atom_count
    floor_before = (state.contrast * n / 4.0) ** 2 / var_z
    floor_after = (contrast_after * n / 4.0) ** 2 / new_var_z
    new_var_anti = max(new_var_anti, floor_after) + (excess - 1.0) * max(0.0, floor_after - floor_before)

    return state.model_copy(
        update={
            "offset_pol": state.offset_pol + s * var_z / total * innovation,
            "offset_az": state.offset_az + s * cov / total * innovation,
            "var_z": new_var_z,
            "cov_za": new_cov,
            "var_anti": new_var_anti,
        }
    )


def qnd_population_probe(
    state: CollectiveSpinState,
    n_photons: float,
    params: CavityParams,
    rng: np.random.Generator,
) -> Tuple[QndOutcome, CollectiveSpinState]:
    """
    Probe the ground-state population N_g = N/2 + J_z through the cavity shift.

    Returns the inferred N_g and the conditioned state (scatter-reduced
    contrast, anti-squeezed variance raised to the uncertainty floor).
    """
    if n_photons < 0:
        raise ValueError(f"n_photons must be >= 0, got {n_photons}")
    half = state.atom_count / 2.0
    if n_photons == 0:
        return QndOutcome(estimate=half + state.mean_jz, imprecision=math.inf, photons_used=0.0), state

    sigma = measurement_imprecision(n_photons, params)
    n_ground = half + sample_jz(state, rng)
    per_atom = dispersive_shift(1.0, params)
    shift = dispersive_shift(n_ground, params) + rng.normal(0.0, sigma) * abs(per_atom)
    estimate = shift / per_atom

    contrast_after = state.contrast * math.exp(-params.scatter_coeff * n_photons)
    conditioned = _condition(state, estimate - half, sigma**2, contrast_after, params.anti_squeeze_excess)
    conditioned = scale_contrast(conditioned, contrast_after / state.contrast)
    return QndOutcome(estimate=estimate, imprecision=sigma, photons_used=float(n_photons)), conditioned


def jz_echo_measurement(
    state: CollectiveSpinState,
    n_photons: float,
    pi_fidelity: float,
    params: CavityParams,
    lattice: LatticeConfig,
    rng: np.random.Generator,
) -> Tuple[float, CollectiveSpinState]:
    """
    Probe N_g, flip with a pi pulse about x, probe again.

    The estimate (N_g - N_g') / 2 is J_z before the block. The state leaves
    with J_z inverted and with the residual light-shift dephasing that the
    echo did not cancel.
    """
    if n_photons == 0:
        return state.mean_jz, state

    first, state = qnd_population_probe(state, n_photons, params, rng)
    state = rotate(state, "x", math.pi, pi_fidelity)
    second, state = qnd_population_probe(state, n_photons, params, rng)

    residual = echo_residual_coeff(params, lattice) * n_photons**2
    state = scale_contrast(state, math.exp(-residual / 2.0))
    return (first.estimate - second.estimate) / 2.0, state


def residual_light_shift(
    lattice: LatticeConfig,
    n_photons: float,
    rng: np.random.Generator,
    params: CavityParams | None = None,
    echo: bool = True,
    size: Optional[int] = None,
) -> Union[float, np.ndarray]:
    """
    Sample the phase offset one atom keeps from a QND probe.

    With echo the inhomogeneous shift is mostly cancelled and centred on
    zero; without it (diagnostic) the full per-lattice spread applies on
    top of a mean shift of light_shift_mean_ratio times that spread.
    `size` draws that many atoms at once.
    """
    if n_photons < 0:
        raise ValueError(f"n_photons must be >= 0, got {n_photons}")
    if n_photons == 0:
        return 0.0 if size is None else np.zeros(size)
    params = params or CavityParams()
    coeffs = params.echo_residual_coeff if echo else params.light_shift_coeff
    spread = math.sqrt(coeffs[lattice.dimensionality]) * n_photons
    mean = 0.0 if echo else params.light_shift_mean_ratio * spread
    if size is None:
        return float(rng.normal(mean, spread))
    return rng.normal(mean, spread, size)


def probe_ramsey_response(
    lattice: LatticeConfig,
    n_photons: float,
    rng: np.random.Generator,
    params: CavityParams | None = None,
    echo: bool = True,
    atoms: int = 2000,
) -> Tuple[float, float]:
    """
    Ramsey contrast retention and mean phase shift caused by one probe
    block placed inside the dark time.

    Per-atom light-shift phases are sampled and averaged as exp(i phi);
    free-space scattering adds two probes' worth of loss with echo and one
    without, and the echo pi pulse its fidelity.
    """
    if atoms < 2:
        raise ValueError(f"atoms must be >= 2, got {atoms}")
    params = params or CavityParams()
    phases = residual_light_shift(lattice, n_photons, rng, params, echo=echo, size=atoms)
    mean_vector = np.mean(np.exp(1j * phases))
    probes = 2 if echo else 1
    retention = abs(mean_vector) * math.exp(-params.scatter_coeff * n_photons * probes)
    if echo and n_photons > 0:
        retention *= params.pi_fidelity
    return float(retention), float(np.angle(mean_vector))
