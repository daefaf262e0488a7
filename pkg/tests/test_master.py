import math

import numpy as np
import pytest

from app.models.physics import DensityMatrix, PhysicalParams, PureState
from app.services.master_service import (
    Liouvillian,
    _rk4_step_matrix,
    _RK4Stepper,
    analytic_populations,
    apply_liouvillian,
    build_liouvillian,
    dicke_populations,
    integrate,
    steady_state_analytic,
    steady_state_numeric,
    unvectorize,
    vectorize,
)
from app.utils.errors import ClosedFormNotApplicable, SolverError


def test_vectorization_is_column_stacking():
    """vec and unvec are inverse, with column-major order"""
    rho = np.arange(16).reshape(4, 4)
    assert vectorize(rho)[1] == rho[1, 0]
    assert np.array_equal(unvectorize(vectorize(rho)), rho)


def test_liouvillian_preserves_trace(strong_params):
    """Tr L(rho) = 0 for every rho"""
    L = build_liouvillian(strong_params)
    assert np.allclose(L.trace_row(), 0.0, atol=1e-12)
    rho = PureState.dicke("e").density().entries
    assert abs(np.trace(apply_liouvillian(L, rho))) < 1e-12


def test_undriven_steady_state_is_ground():
    """Without driving everything decays to |11>"""
    rho = steady_state_numeric(build_liouvillian(PhysicalParams(separation_r=0.5)))
    assert dicke_populations(rho)["g"] == pytest.approx(1.0, abs=1e-12)


def test_independent_atoms_steady_state(independent_params):
    """C neglected: populations of two independently driven atoms"""
    rho = steady_state_numeric(build_liouvillian(independent_params))
    populations = dicke_populations(rho)
    drive = 1.0 + 2 * 0.3 ** 2
    assert populations["e"] == pytest.approx(0.3 ** 4 / drive ** 2, abs=1e-12)
    assert populations["g"] == pytest.approx((1.0 + 0.3 ** 2) ** 2 / drive ** 2, abs=1e-12)


@pytest.mark.parametrize("omega", [0.1, 0.3, 3.0])
@pytest.mark.parametrize("r", [1.0 / math.pi, 1.0, 10.0])
def test_closed_form_matches_kernel(omega, r):
    """Closed-form Dicke populations agree with the Liouvillian null space"""
    params = PhysicalParams.driven(omega, r)
    numeric = dicke_populations(steady_state_numeric(build_liouvillian(params)))
    analytic = analytic_populations(params).as_dict()
    for label in "gsae":
        assert numeric[label] == pytest.approx(analytic[label], abs=1e-8)
    assert numeric["a"] == pytest.approx(numeric["e"], abs=1e-10)


def test_closed_form_needs_equal_real_drive():
    """Unequal or complex Rabi frequencies have no closed form"""
    with pytest.raises(ClosedFormNotApplicable):
        analytic_populations(PhysicalParams(rabi_1=0.3, rabi_2=0.2))
    with pytest.raises(ClosedFormNotApplicable):
        analytic_populations(PhysicalParams(rabi_1=0.3j, rabi_2=0.3j))


def test_analytic_steady_state_is_physical(strong_params):
    """Closed-form populations combined with numeric coherences"""
    rho = steady_state_analytic(strong_params)
    assert rho.is_physical
    assert dicke_populations(rho)["e"] == pytest.approx(analytic_populations(strong_params).ee)


def test_free_decay_of_doubly_excited_state():
    """rho_ee(t) = exp(-2At) without driving"""
    params = PhysicalParams(separation_r=1.0 / math.pi)
    result = integrate(PureState.dicke("e").density(), 1.0, 1e-3, build_liouvillian(params), [0.0, 1.0])
    assert result.at(1.0).entries[3, 3].real == pytest.approx(math.exp(-2.0), abs=1e-9)
    assert all(state.is_physical for state in result.states)


def test_integration_relaxes_to_steady_state(strong_params):
    """Long integration reaches the kernel"""
    L = build_liouvillian(strong_params)
    result = integrate(PureState.basis("11").density(), 100.0, 1e-2, L, [100.0])
    assert np.allclose(result.states[-1].entries, steady_state_numeric(L).entries, atol=1e-7)


def test_zero_generator_leaves_state_alone():
    """A vanishing Liouvillian is the identity flow"""
    rho0 = PureState.dicke("s").density()
    result = integrate(rho0, 0.5, 1e-2, Liouvillian(np.zeros((16, 16), dtype=complex)), [0.5])
    assert np.allclose(result.states[0].entries, rho0.entries)


def test_integration_preconditions(strong_params):
    """dt outside (0, 1e-2] and non-physical starting points are refused"""
    L = build_liouvillian(strong_params)
    rho0 = PureState.basis("11").density()
    with pytest.raises(ValueError):
        integrate(rho0, 1.0, 0.1, L)
    with pytest.raises(ValueError):
        integrate(DensityMatrix(np.eye(4)), 1.0, 1e-3, L)


def test_rk4_halves_step_on_trace_drift():
    """A slightly trace-losing generator is retried with two half steps"""
    generator = -1.5e-6 * np.eye(16, dtype=complex)
    stepper = _RK4Stepper(generator, 1e-2)
    vec = vectorize(PureState.dicke("s").density().entries)
    half = _rk4_step_matrix(generator, 5e-3)
    assert np.allclose(stepper.step(vec), half @ half @ vec, rtol=0.0, atol=1e-15)
    assert set(stepper._matrices) == {0, 1}


def test_rk4_aborts_when_halving_does_not_help():
    """Persistent trace drift ends the integration with SolverError"""
    with pytest.raises(SolverError):
        integrate(PureState.dicke("s").density(), 0.1, 1e-2, Liouvillian(-np.eye(16, dtype=complex)), [0.0])


def test_degenerate_kernel_is_refused():
    """A steady state needs a one-dimensional Liouvillian kernel"""
    with pytest.raises(SolverError):
        steady_state_numeric(Liouvillian(np.zeros((16, 16), dtype=complex)))
