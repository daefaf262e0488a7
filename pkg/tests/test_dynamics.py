import logging
import math

import numpy as np
import pytest
from scipy.linalg import expm

from app.models.physics import PhysicalParams, PureState
from app.services.dynamics_service import (
    ConditionalHamiltonian,
    DipoleCoupling,
    conditional_hamiltonian,
    dipole_coupling,
    effective_coupling,
    no_emission_probability,
    no_jump_propagator,
)
from app.services.emission_service import SphereQuadrature, intensity_field


def test_coupling_at_strong_separation():
    """C at r = lambda/pi for a dipole perpendicular to the atom axis"""
    C = dipole_coupling(PhysicalParams(separation_r=1.0 / math.pi)).value_C
    assert C.real == pytest.approx(0.355425, rel=1e-5)
    assert C.imag == pytest.approx(0.575069, rel=1e-5)


def test_coupling_small_distance_limit():
    """Re C approaches A as the atoms merge"""
    C = dipole_coupling(PhysicalParams(separation_r=1e-3))
    assert C.real == pytest.approx(1.0, abs=1e-3)


def test_coupling_far_apart_is_weak():
    """|C| falls off like 1/(k0 r)"""
    C = dipole_coupling(PhysicalParams(separation_r=10.0))
    assert abs(C.value_C) < 1.5 / (20 * math.pi) * 1.01


def test_coupling_rejects_contact():
    """Separations at or below 1e-6 are refused"""
    with pytest.raises(ValueError):
        dipole_coupling(PhysicalParams(separation_r=1e-7))


def test_coupling_toggle():
    """include_coupling=False zeroes C"""
    params = PhysicalParams(separation_r=0.5, include_coupling=False)
    assert effective_coupling(params) == DipoleCoupling.neglected()


def test_decay_widths_are_collective_rates():
    """Undriven decay widths are 0, A - Re C, A + Re C and 2A"""
    params = PhysicalParams(separation_r=1.0 / math.pi)
    re_c = dipole_coupling(params).real
    widths = conditional_hamiltonian(params).decay_widths()
    assert np.allclose(widths, sorted([0.0, 1.0 - re_c, 1.0 + re_c, 2.0]))


def test_propagator_matches_expm(strong_params):
    """Eigendecomposition propagator agrees with scaling-and-squaring"""
    h = conditional_hamiltonian(strong_params)
    assert np.allclose(no_jump_propagator(h, 0.37), expm(-1j * h.matrix * 0.37), atol=1e-12)


def test_propagator_edge_cases(strong_params):
    """dt = 0 gives the identity, negative dt is refused"""
    h = conditional_hamiltonian(strong_params)
    assert np.allclose(no_jump_propagator(h, 0.0), np.eye(4))
    with pytest.raises(ValueError):
        no_jump_propagator(h, -1e-3)


def test_no_emission_probability_from_dicke_states():
    """Survival of |s>, |a> and |e> without driving"""
    params = PhysicalParams(separation_r=1.0 / math.pi)
    re_c = dipole_coupling(params).real
    u = no_jump_propagator(conditional_hamiltonian(params), 0.5)
    assert no_emission_probability(PureState.dicke("s"), u) == pytest.approx(math.exp(-(1 + re_c) * 0.5))
    assert no_emission_probability(PureState.dicke("a"), u) == pytest.approx(math.exp(-(1 - re_c) * 0.5))
    assert no_emission_probability(PureState.dicke("e"), u) == pytest.approx(math.exp(-1.0))
    assert no_emission_probability(PureState.dicke("g"), u) == pytest.approx(1.0)


def test_no_emission_probability_bounded(strong_params):
    """Driving never makes the norm grow"""
    u = no_jump_propagator(conditional_hamiltonian(strong_params), 1e-2)
    rng = np.random.default_rng(3)
    for _ in range(10):
        state = PureState.unnormalized(rng.standard_normal(4) + 1j * rng.standard_normal(4)).normalize()
        assert 0.0 <= no_emission_probability(state, u) <= 1.0 + 1e-12


def test_decay_operator_is_positive(strong_params):
    """i(H - H^dagger) never describes gain, with or without driving"""
    h = conditional_hamiltonian(strong_params)
    assert np.allclose(h.decay_operator(), h.decay_operator().conj().T)
    assert np.all(h.decay_widths() >= -1e-12)


def test_propagator_semigroup(strong_params):
    """U(t1) U(t2) = U(t1 + t2)"""
    h = conditional_hamiltonian(strong_params)
    combined = no_jump_propagator(h, 0.2) @ no_jump_propagator(h, 0.3)
    assert np.allclose(combined, no_jump_propagator(h, 0.5), atol=1e-12)


def test_propagator_falls_back_for_defective_generator():
    """A Jordan block has no usable eigenbasis; scaling-and-squaring takes over"""
    matrix = np.diag(np.full(4, -0.5j)) + np.diag([1.0, 0.0, 0.0], k=1)
    h = ConditionalHamiltonian(matrix.astype(complex))
    assert np.allclose(no_jump_propagator(h, 0.7), expm(-1j * matrix * 0.7), atol=1e-12)


def test_short_step_loss_is_emission_rate(strong_params):
    """1 - P0 over a short step is dt times the sphere-integrated intensity"""
    dt = 1e-4
    u = no_jump_propagator(conditional_hamiltonian(strong_params), dt)
    quadrature = SphereQuadrature()
    rng = np.random.default_rng(8)
    for _ in range(5):
        state = PureState.unnormalized(rng.standard_normal(4) + 1j * rng.standard_normal(4)).normalize()
        integrated = quadrature.integrate(lambda k: intensity_field(state, strong_params, k))
        assert (1.0 - no_emission_probability(state, u)) / dt == pytest.approx(integrated, abs=1e-3)


def test_real_part_of_coupling_bounded_by_decay_rate():
    """|Re C| <= A for every separation and dipole orientation"""
    for dipole in ((0.0, 0.0, 1.0), (1.0, 0.0, 0.0), (1.0, 1.0, 0.0)):
        for r in np.logspace(-2, 2, 400):
            C = dipole_coupling(PhysicalParams(separation_r=float(r), dipole_orientation=dipole))
            assert abs(C.real) <= 1.0 + 1e-12


def test_small_separation_warned_once(caplog):
    """Repeated evaluation at one unvalidated separation logs a single warning"""
    params = PhysicalParams(separation_r=0.0731)
    with caplog.at_level(logging.WARNING, logger="qjump"):
        for _ in range(5):
            dipole_coupling(params)
    assert sum("0.0731" in record.getMessage() for record in caplog.records) == 1
