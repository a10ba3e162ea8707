# tests/test_spin_state.py

import math

import numpy as np
import pytest
from pydantic import ValidationError

from core.models import CollectiveSpinState, EnsembleConfig, wrap_phase
from core.spin_state import (
    MIN_CONTRAST,
    accumulate_phase,
    dephase,
    direction,
    excited_state,
    new_css,
    qpn,
    rotate,
    sample_jz,
    scale_contrast,
)


def test_qpn_of_30000_atoms():
    assert qpn(30000) == pytest.approx(86.6025, abs=1e-4)
    assert qpn(0) == 0.0
    with pytest.raises(ValueError):
        qpn(-1)


def test_new_css_is_equatorial_with_quarter_variances():
    state = new_css(EnsembleConfig(atom_count=30000, initial_contrast=1.0))
    assert state.mean_jz == pytest.approx(0.0, abs=1e-9)
    assert state.jz_variance == pytest.approx(7500.0)
    assert state.var_anti == pytest.approx(7500.0)
    assert state.excitation == pytest.approx(0.5)
    np.testing.assert_allclose(direction(state), [1.0, 0.0, 0.0], atol=1e-15)


def test_single_atom_css_has_variance_quarter():
    state = new_css(EnsembleConfig(atom_count=1, initial_contrast=1.0))
    assert state.jz_variance == pytest.approx(0.25)


def test_state_rejects_invalid_fields():
    with pytest.raises(ValidationError):
        new_css(EnsembleConfig(atom_count=0))
    with pytest.raises(ValidationError):
        CollectiveSpinState(atom_count=10, contrast=1.2, polar_angle=1.0, var_z=1.0, var_anti=1.0)


def test_excited_state_pulse_gives_css_on_minus_x():
    state = rotate(excited_state(EnsembleConfig(initial_contrast=1.0)), "y", math.pi / 2)
    np.testing.assert_allclose(direction(state), [-1.0, 0.0, 0.0], atol=1e-12)
    assert state.jz_variance == pytest.approx(7500.0)
    assert state.mean_jz == pytest.approx(0.0, abs=1e-9)


def test_pi_pulse_inverts_population():
    state = rotate(new_css(EnsembleConfig(initial_contrast=1.0)), "y", math.pi / 2)
    # +x rotated about y by pi/2 points to -z: all atoms excited
    assert state.mean_jz == pytest.approx(-15000.0)
    assert state.excitation == pytest.approx(1.0)
    assert state.jz_variance == pytest.approx(0.0, abs=1e-9)
    flipped = rotate(state, "x", math.pi)
    assert flipped.mean_jz == pytest.approx(15000.0)
    assert flipped.excitation == pytest.approx(0.0, abs=1e-12)


def test_full_turn_is_identity():
    state = new_css(EnsembleConfig()).model_copy(update={"var_z": 100.0, "var_anti": 6e5, "cov_za": 50.0})
    turned = state
    for _ in range(4):
        turned = rotate(turned, "x", math.pi / 2)
    assert turned.var_z == pytest.approx(state.var_z)
    assert turned.var_anti == pytest.approx(state.var_anti)
    assert turned.cov_za == pytest.approx(state.cov_za, abs=1e-6)


def test_rotation_about_mean_swaps_quadratures():
    squeezed = new_css(EnsembleConfig()).model_copy(update={"var_z": 700.0, "var_anti": 180000.0})
    turned = rotate(squeezed, "x", math.pi / 2)
    assert turned.var_z == pytest.approx(180000.0)
    assert turned.var_anti == pytest.approx(700.0)
    assert turned.mean_jz == pytest.approx(0.0, abs=1e-9)


def test_rotation_preserves_uncertainty_product():
    squeezed = new_css(EnsembleConfig()).model_copy(update={"var_z": 700.0, "var_anti": 180000.0})
    turned = rotate(squeezed, "x", 0.3, quadrature_error=0.07)
    det_before = squeezed.var_z * squeezed.var_anti - squeezed.cov_za**2
    det_after = turned.var_z * turned.var_anti - turned.cov_za**2
    assert det_after == pytest.approx(det_before, rel=1e-9)


def test_quadrature_error_leaks_anti_squeezed_noise():
    squeezed = new_css(EnsembleConfig()).model_copy(update={"var_z": 700.0, "var_anti": 180000.0})
    tilted = rotate(squeezed, "z", 0.0, quadrature_error=0.0723)
    expected = 700.0 * math.cos(0.0723) ** 2 + 180000.0 * math.sin(0.0723) ** 2
    assert tilted.var_z == pytest.approx(expected, rel=1e-9)
    np.testing.assert_allclose(direction(tilted), direction(squeezed), atol=1e-14)


def test_rotation_fidelity_scales_contrast():
    state = rotate(new_css(EnsembleConfig(initial_contrast=0.9)), "x", 0.1, fidelity=0.95)
    assert state.contrast == pytest.approx(0.855)
    with pytest.raises(ValueError):
        rotate(state, "x", 0.1, fidelity=0.0)
    with pytest.raises(ValueError):
        rotate(state, "w", 0.1)


def test_phase_maps_to_population_through_closing_pulse():
    state = rotate(excited_state(EnsembleConfig(initial_contrast=1.0)), "y", math.pi / 2)
    state = rotate(state, "x", -math.pi / 2)
    state = accumulate_phase(state, 1e-3)
    state = rotate(state, "x", -math.pi / 2)
    assert state.mean_jz == pytest.approx(15000.0 * 1e-3, rel=1e-9)


def test_dephasing_keeps_mapped_population():
    state = accumulate_phase(new_css(EnsembleConfig(initial_contrast=1.0)), 0.0)
    state = state.model_copy(update={"signal_pol": 2e-3})
    before = state.mean_jz
    faded = dephase(state, 4.5, 4.5)
    assert faded.contrast == pytest.approx(math.exp(-1.0))
    assert faded.mean_jz == pytest.approx(before)
    assert dephase(state, 0.0, 4.5) is state
    with pytest.raises(ValueError):
        dephase(state, -1.0, 4.5)
    with pytest.raises(ValueError):
        scale_contrast(state, 1.5)


def test_dephasing_composes():
    state = new_css(EnsembleConfig()).model_copy(update={"signal_pol": 1e-3})
    stepwise = dephase(dephase(state, 0.7, 4.5), 1.9, 4.5)
    at_once = dephase(state, 2.6, 4.5)
    assert stepwise.contrast == pytest.approx(at_once.contrast, rel=1e-12)
    assert stepwise.mean_jz == pytest.approx(at_once.mean_jz, rel=1e-9)


def test_long_dark_time_floors_contrast():
    state = new_css(EnsembleConfig()).model_copy(update={"signal_pol": 2e-3})
    faded = dephase(state, 3400.0, 4.5)
    assert faded.contrast == MIN_CONTRAST
    assert faded.mean_jz == pytest.approx(state.mean_jz, rel=1e-9)
    assert scale_contrast(state, 0.0).contrast == MIN_CONTRAST
    assert dephase(faded, 10.0, 4.5).contrast == MIN_CONTRAST


@pytest.mark.parametrize("axis", ["x", "y", "z"])
@pytest.mark.parametrize("angle", [0.3, 1.2, math.pi / 2])
def test_rotation_then_inverse_restores_state(axis, angle):
    state = new_css(EnsembleConfig()).model_copy(
        update={
            "polar_angle": math.pi / 2 - 0.2,
            "carrier_phase": 0.4,
            "offset_pol": 12.0,
            "offset_az": -3.0,
            "signal_az": 1e-3,
            "var_z": 700.0,
            "var_anti": 180000.0,
            "cov_za": 90.0,
        }
    )
    back = rotate(rotate(state, axis, angle), axis, -angle)
    assert back.model_dump() == pytest.approx(state.model_dump(), rel=1e-9, abs=1e-9)


def test_accumulate_phase_moves_mean_phase():
    state = accumulate_phase(new_css(EnsembleConfig()), 0.25)
    assert state.mean_phase == pytest.approx(0.25)
    assert accumulate_phase(state, 0.0) is state


def test_wrap_phase_range():
    assert wrap_phase(math.pi) == pytest.approx(math.pi)
    assert wrap_phase(-math.pi) == pytest.approx(math.pi)
    assert wrap_phase(3 * math.pi / 2) == pytest.approx(-math.pi / 2)


def test_sample_jz_statistics(rng):
    state = new_css(EnsembleConfig(atom_count=30000))
    draws = np.array([sample_jz(state, rng) for _ in range(20000)])
    assert abs(draws.mean()) < 3 * math.sqrt(7500.0 / 20000)
    assert draws.var() == pytest.approx(7500.0, rel=0.05)
