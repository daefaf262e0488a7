import math

import numpy as np
import pytest
from scipy import stats

from app.models.physics import Direction, PhysicalParams, PureState
from app.services.dynamics_service import dipole_coupling
from app.services.emission_service import (
    SphereQuadrature,
    apply_reset,
    integrated_reset_map,
    intensity_decomposition,
    intensity_field,
    intensity_mixed,
    intensity_pure,
    jump_superoperator,
    reset_amplitudes,
    sample_direction,
    single_atom_reset,
    total_emission_rate,
)
from app.services.validation_service import random_density_matrix
from app.utils.errors import ZeroRateError


@pytest.mark.parametrize("r", [1.0 / math.pi, 1.0, 10.0])
def test_quadrature_identity(r):
    """Summing R_k rho R_k^dagger over directions gives the two-operator jump map"""
    params = PhysicalParams(separation_r=r)
    rng = np.random.default_rng(11)
    for _ in range(3):
        rho = random_density_matrix(rng).entries
        assert np.allclose(integrated_reset_map(rho, params), jump_superoperator(rho, params), atol=1e-6)


def test_sphere_quadrature_single_atom_rate():
    """A single dipole emits at total rate A"""
    params = PhysicalParams()
    quadrature = SphereQuadrature()
    assert quadrature.integrate(lambda k: np.ones(k.shape[:-1])) == pytest.approx(4 * math.pi)
    rate = quadrature.integrate(lambda k: np.abs(reset_amplitudes(params, k)[..., 0]) ** 2)
    assert rate == pytest.approx(1.0, rel=1e-12)


def test_total_emission_rates():
    """|e> emits at 2A, |s> at A + Re C"""
    params = PhysicalParams(separation_r=1.0 / math.pi)
    re_c = dipole_coupling(params).real
    assert total_emission_rate(PureState.dicke("e"), params) == pytest.approx(2.0)
    assert total_emission_rate(PureState.dicke("s"), params) == pytest.approx(1.0 + re_c)
    assert total_emission_rate(PureState.dicke("a").density(), params) == pytest.approx(1.0 - re_c)


def test_intensity_decomposition_sums_to_total(far_params):
    """Single-atom parts plus interference equal the full rate density"""
    k = Direction(theta=1.1, phi=0.4)
    state = PureState.dicke("s")
    i1, i2, interference = intensity_decomposition(state, k, far_params)
    assert i1 + i2 + interference == pytest.approx(intensity_pure(state, k, far_params))
    assert intensity_mixed(state.density(), k, far_params) == pytest.approx(intensity_pure(state, k, far_params))


def test_which_way_state_has_no_interference(far_params):
    """|21> only lets atom 1 emit"""
    k = Direction(theta=math.pi / 2, phi=0.3)
    i1, i2, interference = intensity_decomposition(PureState.basis("21"), k, far_params)
    assert i2 == 0.0 and interference == 0.0
    assert i1 == pytest.approx(3.0 / (8.0 * math.pi))


def test_single_atom_reset_picks_one_atom(far_params):
    """R^(2) annihilates states with atom 2 in the ground level"""
    r2 = single_atom_reset(far_params, Direction(theta=1.0), 2)
    assert np.allclose(r2 @ PureState.basis("21").amplitudes, 0.0)
    with pytest.raises(ValueError):
        single_atom_reset(far_params, Direction(theta=1.0), 3)


def test_sampling_from_ground_state_fails(far_params):
    """No emission direction exists for |11>"""
    with pytest.raises(ZeroRateError):
        sample_direction(PureState.basis("11"), far_params, np.random.default_rng(0))


def test_sampled_directions_follow_dipole_pattern():
    """For one excited z dipole, <cos^2 theta> = 1/5"""
    params = PhysicalParams(separation_r=1.0)
    rng = np.random.default_rng(5)
    state = PureState.basis("21")
    cos2 = [math.cos(sample_direction(state, params, rng).theta) ** 2 for _ in range(4000)]
    assert np.mean(cos2) == pytest.approx(0.2, abs=0.02)


def test_reset_is_normalized(strong_params):
    """Post-emission states are normalized; no state survives along the dipole axis"""
    post = apply_reset(PureState.dicke("e"), Direction(theta=0.8, phi=1.3), strong_params)
    assert abs(post.norm_squared - 1.0) < 1e-10
    with pytest.raises(ZeroRateError):
        apply_reset(PureState.dicke("e"), Direction(theta=0.0), strong_params)


def test_total_emission_rate_with_coupling_neglected(strong_params):
    """C switched off: the rate is the trace of the jump map, A (n1 + n2)"""
    params = strong_params.model_copy(update={"include_coupling": False})
    rho = random_density_matrix(np.random.default_rng(4))
    expected = float(np.trace(jump_superoperator(rho.entries, params)).real)
    assert total_emission_rate(rho, params) == pytest.approx(expected, rel=1e-12)
    assert total_emission_rate(PureState.dicke("s"), params) == pytest.approx(1.0)
    assert total_emission_rate(PureState.dicke("s"), params, dipole_coupling(params)) == pytest.approx(
        1.0 + dipole_coupling(params).real
    )


def test_sampling_is_reproducible(far_params):
    """Equal seeds give equal direction sequences"""
    state = PureState.dicke("s")
    rng_a, rng_b = np.random.default_rng(9), np.random.default_rng(9)
    first = [sample_direction(state, far_params, rng_a) for _ in range(50)]
    second = [sample_direction(state, far_params, rng_b) for _ in range(50)]
    assert [(k.theta, k.phi) for k in first] == [(k.theta, k.phi) for k in second]


def test_symmetric_state_phi_histogram():
    """Azimuths sampled from |s> at r = 10 wavelengths follow the fringe pattern"""
    params = PhysicalParams(separation_r=10.0)
    state = PureState.dicke("s")
    n_bins, n_samples = 32, 4000
    rng = np.random.default_rng(21)
    phis = [sample_direction(state, params, rng).phi for _ in range(n_samples)]
    observed, _ = np.histogram(phis, bins=n_bins, range=(0.0, 2.0 * math.pi))

    quadrature = SphereQuadrature(64, 4096)
    density = intensity_field(state, params, quadrature.k_hat) * quadrature.weights
    per_phi = density.sum(axis=0)
    bins = np.minimum((quadrature.phi[0] / (2.0 * math.pi) * n_bins).astype(int), n_bins - 1)
    expected = np.bincount(bins, weights=per_phi, minlength=n_bins)
    expected = n_samples * expected / expected.sum()
    assert stats.chisquare(observed, expected).pvalue > 1e-3
