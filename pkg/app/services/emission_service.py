"""Direction-resolved photon emission: reset operators, intensities, sampling."""
import math
from dataclasses import dataclass
from typing import Callable, Tuple, Union

import numpy as np

from app.models.physics import DensityMatrix, Direction, PhysicalParams, PureState
from app.services.dynamics_service import DipoleCoupling, dipole_coupling, effective_coupling
from app.services.operators import (
    EXCITED_1,
    EXCITED_2,
    EXCHANGE_21,
    R_MINUS,
    R_PLUS,
    S1_MINUS,
    S2_MINUS,
)
from app.utils.errors import ZeroRateError
from app.utils.logger import logger

ZERO_RESET_NORM = 1e-12
PROPOSALS_PER_DRAW = 64
MAX_PROPOSAL_DRAWS = 10_000

StateLike = Union[PureState, DensityMatrix]


def dipole_prefactor(params: PhysicalParams) -> float:
    """3A/(8 pi), the single-atom emission density at right angles to the dipole"""
    return 3.0 * params.decay_rate_A / (8.0 * math.pi)


def unit_vectors(theta, phi) -> np.ndarray:
    """Stack of unit vectors with shape broadcast(theta, phi) + (3,)"""
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def reset_amplitudes(params: PhysicalParams, k_hat: np.ndarray) -> np.ndarray:
    """Scalars c_i with R^(i) = c_i S-_i, for unit vectors k_hat of shape (..., 3)

    Returns an array of shape (..., 2).
    """
    k_hat = np.asarray(k_hat, dtype=float)
    angular = np.asarray(1.0 - (k_hat @ params.dipole) ** 2)
    magnitude = np.sqrt(dipole_prefactor(params) * np.clip(angular, 0.0, None))
    # k0 k.r_i with positions in wavelengths
    phases = 2.0 * math.pi * (k_hat @ params.atom_positions.T)
    return magnitude[..., None] * np.exp(-1j * phases)


@dataclass(frozen=True)
class ResetOperator:
    """R_k = R_k^(1) + R_k^(2) for one emission direction"""

    per_atom: Tuple[np.ndarray, np.ndarray]
    total: np.ndarray
    direction: Direction


def reset_operator(params: PhysicalParams, k: Direction) -> ResetOperator:
    c1, c2 = reset_amplitudes(params, k.unit_vector())
    r1 = c1 * S1_MINUS
    r2 = c2 * S2_MINUS
    return ResetOperator(per_atom=(r1, r2), total=r1 + r2, direction=k)


def single_atom_reset(params: PhysicalParams, k: Direction, atom: int) -> np.ndarray:
    """Reset operator when only the given atom can reach the screen"""
    if atom not in (1, 2):
        raise ValueError(f"atom must be 1 or 2, got {atom}")
    return reset_operator(params, k).per_atom[atom - 1]


def emission_moments(state: StateLike) -> Tuple[float, float, complex]:
    """(<S+1 S-1>, <S+2 S-2>, <S+2 S-1>) of a normalized state or physical rho"""
    if isinstance(state, PureState):
        state.require_normalized()
        psi = state.amplitudes
        return (
            float(np.vdot(psi, EXCITED_1 @ psi).real),
            float(np.vdot(psi, EXCITED_2 @ psi).real),
            complex(np.vdot(psi, EXCHANGE_21 @ psi)),
        )
    state.require_physical()
    return (
        state.expectation(EXCITED_1).real,
        state.expectation(EXCITED_2).real,
        state.expectation(EXCHANGE_21),
    )


def _intensity_from_moments(params, k_hat, moments) -> np.ndarray:
    n1, n2, exchange = moments
    c = reset_amplitudes(params, k_hat)
    c1, c2 = c[..., 0], c[..., 1]
    cross = 2.0 * (c1 * np.conj(c2) * exchange).real
    return np.abs(c1) ** 2 * n1 + np.abs(c2) ** 2 * n2 + cross


def intensity_pure(state: PureState, k: Direction, params: PhysicalParams) -> float:
    """I_k(psi) = ||R_k |psi>||^2, a rate density per steradian"""
    state.require_normalized()
    reset_vector = reset_operator(params, k).total @ state.amplitudes
    return float(np.vdot(reset_vector, reset_vector).real)


def intensity_mixed(rho: DensityMatrix, k: Direction, params: PhysicalParams) -> float:
    """I_k(rho) = Tr(R_k rho R_k^dagger)"""
    rho.require_physical()
    reset = reset_operator(params, k).total
    return float(np.trace(reset @ rho.entries @ reset.conj().T).real)


def intensity_field(state: StateLike, params: PhysicalParams, k_hat: np.ndarray) -> np.ndarray:
    """Vectorized I_k over an array of unit vectors of shape (..., 3)"""
    return _intensity_from_moments(params, k_hat, emission_moments(state))


def intensity_decomposition(
    state: StateLike, k: Direction, params: PhysicalParams
) -> Tuple[float, float, float]:
    """Single-atom contributions I^(1), I^(2) and the interference term"""
    if isinstance(state, PureState):
        state.require_normalized()
        rho = np.outer(state.amplitudes, state.amplitudes.conj())
    else:
        rho = state.require_physical().entries
    r1, r2 = reset_operator(params, k).per_atom
    i1 = float(np.trace(r1 @ rho @ r1.conj().T).real)
    i2 = float(np.trace(r2 @ rho @ r2.conj().T).real)
    interference = 2.0 * float(np.trace(r2.conj().T @ r1 @ rho).real)
    return i1, i2, interference


def total_emission_rate(
    state: StateLike, params: PhysicalParams, coupling: DipoleCoupling = None
) -> float:
    """Photon emission rate Tr J(rho) of the model in params

    With the coupling neglected this is A (n1 + n2), the rate the no-jump
    evolution produces. Pass dipole_coupling(params) for the sphere integral of I_k.
    """
    if coupling is None:
        coupling = effective_coupling(params)
    n1, n2, exchange = emission_moments(state)
    return params.decay_rate_A * (n1 + n2) + 2.0 * coupling.real * exchange.real


def jump_superoperator(
    rho: np.ndarray, params: PhysicalParams, coupling: DipoleCoupling = None
) -> np.ndarray:
    """(A + Re C) R+ rho R+^dag + (A - Re C) R- rho R-^dag"""
    if coupling is None:
        coupling = effective_coupling(params)
    A = params.decay_rate_A
    re_c = coupling.real
    return (A + re_c) * (R_PLUS @ rho @ R_PLUS.conj().T) + (A - re_c) * (
        R_MINUS @ rho @ R_MINUS.conj().T
    )


class SphereQuadrature:
    """Product rule: Gauss-Legendre in cos(theta) times uniform phi"""

    def __init__(self, n_theta: int = 64, n_phi: int = 128):
        if n_theta < 1 or n_phi < 1:
            raise ValueError("quadrature needs at least one node per axis")
        self.n_theta = n_theta
        self.n_phi = n_phi
        cos_nodes, cos_weights = np.polynomial.legendre.leggauss(n_theta)
        phi_nodes = 2.0 * math.pi * np.arange(n_phi) / n_phi
        theta = np.arccos(cos_nodes)
        self.theta, self.phi = np.meshgrid(theta, phi_nodes, indexing="ij")
        self.weights = np.outer(cos_weights, np.full(n_phi, 2.0 * math.pi / n_phi))
        self.k_hat = unit_vectors(self.theta, self.phi)

    def integrate(self, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Integrate fn(k_hat) over the sphere; fn returns shape (n_theta, n_phi, ...)"""
        values = np.asarray(fn(self.k_hat))
        extra = values.ndim - 2
        weights = self.weights.reshape(self.weights.shape + (1,) * extra)
        return np.sum(values * weights, axis=(0, 1))

    def doubled(self) -> "SphereQuadrature":
        return SphereQuadrature(2 * self.n_theta, 2 * self.n_phi)

    @classmethod
    def refine(
        cls,
        fn: Callable[[np.ndarray], np.ndarray],
        n_theta: int = 64,
        n_phi: int = 128,
        tolerance: float = 1e-8,
        max_doublings: int = 4,
    ) -> np.ndarray:
        """Double resolution until successive integrals differ by less than tolerance"""
        quadrature = cls(n_theta, n_phi)
        previous = quadrature.integrate(fn)
        for _ in range(max_doublings):
            quadrature = quadrature.doubled()
            current = quadrature.integrate(fn)
            if np.max(np.abs(current - previous)) < tolerance:
                return current
            previous = current
        logger.warning(
            f"sphere quadrature did not settle below {tolerance:g} at "
            f"{quadrature.n_theta}x{quadrature.n_phi} nodes"
        )
        return previous


def integrated_reset_map(rho: np.ndarray, params: PhysicalParams, **quadrature_options) -> np.ndarray:
    """Sphere integral of R_k rho R_k^dagger by quadrature"""

    def pair_products(k_hat):
        c = reset_amplitudes(params, k_hat)
        return c[..., :, None] * np.conj(c[..., None, :])

    # K_ij = integral of c_i conj(c_j)
    K = SphereQuadrature.refine(pair_products, **quadrature_options)
    lowering = (S1_MINUS, S2_MINUS)
    result = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            result += K[i, j] * (lowering[i] @ rho @ lowering[j].conj().T)
    return result


def sample_direction(state: StateLike, params: PhysicalParams, rng: np.random.Generator) -> Direction:
    """Draw k with probability density I_k / (total rate) by rejection from the uniform sphere"""
    moments = emission_moments(state)
    n1, n2, _ = moments
    if n1 + n2 <= 0.0 or total_emission_rate(state, params, dipole_coupling(params)) <= 0.0:
        raise ZeroRateError("cannot sample an emission direction: total emission rate is zero")

    # |sum_i c_i <..>| bound: (sqrt(n1) + sqrt(n2))^2 times the dipole prefactor
    envelope = dipole_prefactor(params) * (math.sqrt(n1) + math.sqrt(n2)) ** 2

    for _ in range(MAX_PROPOSAL_DRAWS):
        draws = rng.random((PROPOSALS_PER_DRAW, 3))
        cos_theta = 2.0 * draws[:, 0] - 1.0
        phi = 2.0 * math.pi * draws[:, 1]
        theta = np.arccos(cos_theta)
        values = _intensity_from_moments(params, unit_vectors(theta, phi), moments)
        accepted = np.nonzero(draws[:, 2] * envelope < values)[0]
        if accepted.size:
            first = accepted[0]
            return Direction(theta=float(theta[first]), phi=float(phi[first]))
    raise ZeroRateError("rejection sampler found no emission direction")


def apply_reset(state: PureState, k: Direction, params: PhysicalParams) -> PureState:
    """Normalized post-emission state R_k|psi> / ||.||"""
    reset_vector = reset_operator(params, k).total @ state.amplitudes
    norm = float(np.linalg.norm(reset_vector))
    if norm < ZERO_RESET_NORM:
        raise ZeroRateError(f"no emission possible in direction {k} from this state")
    return PureState(reset_vector / norm)
