# tests/test_cavity_readout.py

import math

import numpy as np
import pytest

from core.cavity_readout import (
    dispersive_shift,
    jz_echo_measurement,
    measurement_imprecision,
    probe_ramsey_response,
    qnd_population_probe,
    residual_light_shift,
)
from core.models import CavityParams, EnsembleConfig, LatticeConfig, wrap_phase
from core.spin_state import new_css


def _lossless(**updates) -> CavityParams:
    params = {"scatter_coeff": 0.0, "anti_squeeze_excess": 1.0}
    params.update(updates)
    return CavityParams(**params)


def test_dispersive_shift_from_coupling_and_detuning(cavity):
    per_atom = dispersive_shift(1.0, cavity)
    assert per_atom == pytest.approx(-(2 * math.pi * 5.1e3) ** 2 / (2 * math.pi * 4e6))
    assert dispersive_shift(15000, cavity) == pytest.approx(15000 * per_atom)
    assert dispersive_shift(0, cavity) == 0.0


def test_zero_detuning_is_rejected(cavity):
    with pytest.raises(ValueError):
        CavityParams(detuning_dc=0.0)
    with pytest.raises(ValueError):
        dispersive_shift(1.0, cavity.model_copy(update={"detuning_dc": 0.0}))


def test_imprecision_scales_as_inverse_sqrt_photons(cavity):
    assert measurement_imprecision(1000, cavity) ** 2 == pytest.approx(1497.02, rel=1e-4)
    assert measurement_imprecision(4000, cavity) == pytest.approx(measurement_imprecision(1000, cavity) / 2)
    with pytest.raises(ValueError):
        measurement_imprecision(0, cavity)


def test_zero_photon_probe_leaves_state_unchanged(rng, cavity):
    state = new_css(EnsembleConfig())
    outcome, after = qnd_population_probe(state, 0, cavity, rng)
    assert after == state
    assert math.isinf(outcome.imprecision)
    assert outcome.photons_used == 0.0
    assert outcome.estimate == pytest.approx(15000.0)


def test_repeated_probes_match_recursive_least_squares(rng):
    """Conditional variance and mean after k probes equal the scalar RLS recursion."""
    n_atoms, sigma2, probes = 400, 25.0, 6
    params = _lossless(imprecision_coeff=math.sqrt(sigma2 * 1000.0))
    state = new_css(EnsembleConfig(atom_count=n_atoms, initial_contrast=1.0))

    p, mean = n_atoms / 4.0, 0.0
    for _ in range(probes):
        outcome, state = qnd_population_probe(state, 1000, params, rng)
        assert outcome.imprecision**2 == pytest.approx(sigma2)
        gain = p / (p + sigma2)
        mean += gain * (outcome.estimate - n_atoms / 2.0 - mean)
        p *= 1.0 - gain

    closed_form = 1.0 / (4.0 / n_atoms + probes / sigma2)
    assert p == pytest.approx(closed_form, rel=1e-12)
    assert state.jz_variance == pytest.approx(closed_form, rel=1e-2)
    assert state.mean_jz == pytest.approx(mean, rel=1e-9, abs=1e-9)


def test_probe_outcomes_have_prior_plus_imprecision_spread(cavity):
    rng = np.random.default_rng(5)
    state = new_css(EnsembleConfig(atom_count=30000))
    estimates = [qnd_population_probe(state, 1000, cavity, rng)[0].estimate for _ in range(6000)]
    assert np.mean(estimates) == pytest.approx(15000.0, abs=3 * math.sqrt(9000.0 / 6000))
    assert np.var(estimates) == pytest.approx(7500.0 + 1497.02, rel=0.06)


def test_probe_respects_uncertainty_floor(rng, cavity):
    state = new_css(EnsembleConfig(initial_contrast=0.85))
    for _ in range(3):
        _, state = qnd_population_probe(state, 1000, cavity, rng)
        floor = (state.contrast * state.atom_count / 4.0) ** 2
        assert state.var_z * state.var_anti - state.cov_za**2 >= floor * (1 - 1e-12)


def test_probe_scatter_reduces_contrast(rng, cavity):
    state = new_css(EnsembleConfig(initial_contrast=0.8))
    _, after = qnd_population_probe(state, 1000, cavity, rng)
    assert after.contrast == pytest.approx(0.8 * math.exp(-1.5e-5 * 1000))


def test_anti_squeeze_excess_multiplies_floor_increase():
    state = new_css(EnsembleConfig(initial_contrast=1.0))
    _, plain = qnd_population_probe(state, 1000, _lossless(), np.random.default_rng(1))
    _, excess = qnd_population_probe(state, 1000, _lossless(anti_squeeze_excess=4.0), np.random.default_rng(1))
    increase = plain.var_anti - state.var_anti
    assert excess.var_anti - state.var_anti == pytest.approx(4.0 * increase, rel=1e-9)
    assert excess.var_z == pytest.approx(plain.var_z)


def test_echo_measurement_estimates_pre_block_jz(cavity, lattice):
    rng = np.random.default_rng(11)
    state = new_css(EnsembleConfig(initial_contrast=0.85))
    errors = []
    for _ in range(10000):
        truth = float(rng.normal(0.0, math.sqrt(7500.0)))
        pinned = state.model_copy(update={"var_z": 1e-9, "offset_pol": truth})
        estimate, _ = jz_echo_measurement(pinned, 1000, 1.0, cavity, lattice, rng)
        errors.append(estimate - truth)
    # two independent probes averaged: sigma_m^2 / 2
    assert np.mean(errors) == pytest.approx(0.0, abs=3 * math.sqrt(1497.02 / 2 / 10000))
    assert np.var(errors) == pytest.approx(1497.02 / 2, rel=0.05)


def test_echo_measurement_flips_jz_and_costs_contrast(rng, cavity, lattice):
    state = new_css(EnsembleConfig(initial_contrast=0.85))
    estimate, after = jz_echo_measurement(state, 1000, 1.0, cavity, lattice, rng)
    assert after.mean_jz == pytest.approx(-estimate, abs=5 * math.sqrt(after.jz_variance) + 60)
    expected = 0.85 * math.exp(-2 * 1.5e-5 * 1000) * math.exp(-1.539808e-7 * 1000**2 / 2)
    assert after.contrast == pytest.approx(expected)
    assert after.contrast / 0.85 == pytest.approx(0.898534, rel=1e-5)


def test_echo_measurement_with_no_photons_is_identity(rng, cavity, lattice):
    state = new_css(EnsembleConfig())
    estimate, after = jz_echo_measurement(state, 0, 1.0, cavity, lattice, rng)
    assert after == state
    assert estimate == state.mean_jz


def test_pi_fidelity_enters_echo_contrast(rng, cavity, lattice):
    state = new_css(EnsembleConfig(initial_contrast=0.85))
    _, perfect = jz_echo_measurement(state, 1000, 1.0, cavity, lattice, np.random.default_rng(2))
    _, lossy = jz_echo_measurement(state, 1000, 0.98, cavity, lattice, np.random.default_rng(2))
    assert lossy.contrast == pytest.approx(0.98 * perfect.contrast)


def test_residual_light_shift_echo_suppresses_spread(cavity):
    lattice_2d = LatticeConfig()
    lattice_1d = LatticeConfig(dimensionality="1D", transverse_depth=None)
    draws = {}
    for name, lat, echo in (("2d", lattice_2d, True), ("1d", lattice_1d, True), ("raw", lattice_2d, False)):
        rng = np.random.default_rng(3)
        draws[name] = np.std([residual_light_shift(lat, 1000, rng, cavity, echo=echo) for _ in range(5000)])
    assert draws["2d"] == pytest.approx(math.sqrt(1.539808e-7) * 1000, rel=0.05)
    assert draws["1d"] > draws["2d"]
    assert draws["raw"] > 10 * draws["2d"]
    assert residual_light_shift(lattice_2d, 0, np.random.default_rng(0)) == 0.0
    with pytest.raises(ValueError):
        residual_light_shift(lattice_2d, -1, np.random.default_rng(0))


def test_two_dimensional_lattice_keeps_more_echo_contrast(cavity):
    state = new_css(EnsembleConfig(initial_contrast=0.85))
    lattice_1d = LatticeConfig(dimensionality="1D", transverse_depth=None)
    _, kept_1d = jz_echo_measurement(state, 1000, 1.0, cavity, lattice_1d, np.random.default_rng(4))
    _, kept_2d = jz_echo_measurement(state, 1000, 1.0, cavity, LatticeConfig(), np.random.default_rng(4))
    assert kept_2d.contrast > kept_1d.contrast
    assert kept_1d.contrast / kept_2d.contrast == pytest.approx(math.exp(-(6.0e-7 - 1.539808e-7) * 1000**2 / 2))


def test_echo_block_leaves_phase_unchanged(cavity, lattice):
    rng = np.random.default_rng(9)
    state = new_css(EnsembleConfig(initial_contrast=0.85))
    for _ in range(200):
        _, after = jz_echo_measurement(state, cavity.probe_photons, cavity.pi_fidelity, cavity, lattice, rng)
        assert abs(wrap_phase(after.mean_phase - state.mean_phase)) < 1e-3


def test_unechoed_light_shift_has_a_mean(cavity, lattice):
    rng = np.random.default_rng(6)
    bare = residual_light_shift(lattice, 100, rng, cavity, echo=False, size=20000)
    echoed = residual_light_shift(lattice, 100, rng, cavity, echo=True, size=20000)
    spread = math.sqrt(4.0e-5) * 100
    assert bare.mean() == pytest.approx(spread, rel=0.02)
    assert bare.std() == pytest.approx(spread, rel=0.02)
    assert abs(echoed.mean()) < 5 * echoed.std() / math.sqrt(20000)
    np.testing.assert_array_equal(residual_light_shift(lattice, 0, rng, size=3), np.zeros(3))


def test_ramsey_response_orders_lattices_and_echo(cavity):
    lattices = {"1D": LatticeConfig(dimensionality="1D", transverse_depth=None), "2D": LatticeConfig()}
    response = {}
    for kind, lat in lattices.items():
        for echo in (True, False):
            rng = np.random.default_rng(12)
            response[kind, echo] = probe_ramsey_response(lat, 100, rng, cavity, echo=echo, atoms=20000)

    # without echo the contrast follows exp(-var / 2) of the light-shift spread
    assert response["2D", False][0] == pytest.approx(math.exp(-0.2) * math.exp(-1.5e-3), abs=0.03)
    assert response["1D", False][0] == pytest.approx(math.exp(-0.6) * math.exp(-1.5e-3), abs=0.03)
    for echo in (True, False):
        assert response["2D", echo][0] > response["1D", echo][0]
    for kind in lattices:
        assert response[kind, True][0] > response[kind, False][0] + 0.15
        assert abs(response[kind, True][1]) < 1e-2
        assert response[kind, False][1] > 0.5
    assert probe_ramsey_response(lattices["2D"], 0, np.random.default_rng(0), cavity) == (1.0, 0.0)
    with pytest.raises(ValueError):
        probe_ramsey_response(lattices["2D"], 100, np.random.default_rng(0), cavity, atoms=1)
