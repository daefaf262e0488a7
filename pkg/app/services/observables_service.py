"""Derived observables: interference patterns, which-way criterion, g2(0) and bunching."""
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from app.config import settings
from app.models.physics import DensityMatrix, Direction, PhysicalParams, PureState
from app.services.dynamics_service import DipoleCoupling
from app.services.emission_service import (
    dipole_prefactor,
    intensity_field,
    intensity_mixed,
    jump_superoperator,
    reset_amplitudes,
    reset_operator,
    unit_vectors,
)
from app.services.operators import EXCHANGE_21
from app.utils.errors import ClosedFormNotApplicable
from app.utils.logger import logger

UNDEFINED_INTENSITY = 1e-12
COHERENCE_THRESHOLD = 1e-10
VISIBILITY_PROFILE_POINTS = 2001

StateLike = Union[PureState, DensityMatrix]


@dataclass(frozen=True)
class AngularGrid:
    """Values sampled on a (theta, phi) product grid, theta-outer

    NaN entries mark points where g2 is undefined.
    """

    theta_points: np.ndarray
    phi_points: np.ndarray
    values: np.ndarray
    maximal_mask: Optional[np.ndarray] = None

    @classmethod
    def sphere(cls, n_theta: int = None, n_phi: int = None) -> "AngularGrid":
        """Poles included in theta, phi uniform on [0, 2pi)"""
        n_theta = n_theta or settings.DEFAULT_THETA_POINTS
        n_phi = n_phi or settings.DEFAULT_PHI_POINTS
        if n_theta < 1 or n_phi < 1:
            raise ValueError("angular grid needs at least one point per axis")
        theta = np.linspace(0.0, math.pi, n_theta)
        phi = np.linspace(0.0, 2.0 * math.pi, n_phi, endpoint=False)
        return cls(theta, phi, np.zeros((n_theta, n_phi)))

    @classmethod
    def ring(cls, theta: float, phi_points) -> "AngularGrid":
        """Single fixed-theta row"""
        Direction(theta=theta)
        phi = np.asarray(phi_points, dtype=float)
        return cls(np.array([theta]), phi, np.zeros((1, phi.size)))

    @property
    def k_hat(self) -> np.ndarray:
        theta, phi = np.meshgrid(self.theta_points, self.phi_points, indexing="ij")
        return unit_vectors(theta, phi)

    def with_values(self, values: np.ndarray, maximal_mask: np.ndarray = None) -> "AngularGrid":
        return replace(self, values=np.asarray(values), maximal_mask=maximal_mask)

    def rows(self):
        """(theta, phi, value) triples in row-major theta-outer order"""
        for i, theta in enumerate(self.theta_points):
            for j, phi in enumerate(self.phi_points):
                yield float(theta), float(phi), float(self.values[i, j])


def _as_density(state: StateLike) -> DensityMatrix:
    if isinstance(state, PureState):
        return state.require_normalized().density()
    return state.require_physical()


def _xi(params: PhysicalParams, theta, phi) -> np.ndarray:
    """Relative emission phase k0 r sin(theta) cos(phi) for atoms on the x axis"""
    return params.k0r * np.sin(theta) * np.cos(phi)


def interference_pattern(rho: DensityMatrix, params: PhysicalParams, grid: AngularGrid) -> AngularGrid:
    """Angular emission rate density of rho over the grid"""
    rho.require_physical()
    return grid.with_values(intensity_field(rho, params, grid.k_hat))


def interference_criterion(state: StateLike) -> Tuple[complex, bool]:
    """Tr(S+_2 S-_1 rho) and whether it is non-zero, i.e. whether fringes can appear"""
    value = _as_density(state).expectation(EXCHANGE_21)
    return value, abs(value) > COHERENCE_THRESHOLD


def g2_zero(rho: DensityMatrix, params: PhysicalParams, k: Direction) -> float:
    """Zero-delay correlation in direction k: rate after a detection over the rate before

    Returns NaN when the rate density before detection is below 1e-12.
    """
    pre_jump = intensity_mixed(rho, k, params)
    if pre_jump < UNDEFINED_INTENSITY:
        return math.nan
    reset = reset_operator(params, k).total
    post_jump_state = DensityMatrix(reset @ rho.entries @ reset.conj().T / pre_jump)
    return intensity_mixed(post_jump_state, k, params) / pre_jump


def _g2_field(rho: DensityMatrix, params: PhysicalParams, k_hat: np.ndarray) -> np.ndarray:
    # R_k R_k = 2 c1 c2 S-_1 S-_2, so Tr(R R rho R^dag R^dag) = 4 |c1 c2|^2 rho_{22,22}
    c = reset_amplitudes(params, k_hat)
    numerator = 4.0 * np.abs(c[..., 0] * c[..., 1]) ** 2 * rho.entries[3, 3].real
    denominator = intensity_field(rho, params, k_hat)
    defined = denominator >= UNDEFINED_INTENSITY
    safe = np.where(defined, denominator, 1.0)
    return np.where(defined, numerator / safe ** 2, np.nan)


def _row_maxima(values: np.ndarray) -> np.ndarray:
    """Local maxima along the last axis, endpoints compared with their single neighbour"""
    if values.shape[-1] < 2:
        return np.zeros(values.shape, dtype=bool)
    filled = np.where(np.isnan(values), -np.inf, values)
    left = np.concatenate([np.full(filled.shape[:-1] + (1,), -np.inf), filled[..., :-1]], axis=-1)
    right = np.concatenate([filled[..., 1:], np.full(filled.shape[:-1] + (1,), -np.inf)], axis=-1)
    return (filled > left) & (filled >= right) & np.isfinite(filled)


def bunching_map(rho: DensityMatrix, params: PhysicalParams, grid: AngularGrid) -> AngularGrid:
    """g2(0) over the grid; maximal_mask flags bunching peaks (local maxima above 1 along phi)"""
    rho.require_physical()
    values = _g2_field(rho, params, grid.k_hat)
    undefined = int(np.isnan(values).sum())
    if undefined:
        logger.info(f"g2 undefined at {undefined} grid points with vanishing intensity")
    mask = _row_maxima(values) & (np.nan_to_num(values, nan=0.0) > 1.0)
    return grid.with_values(values, maximal_mask=mask)


def count_fringe_maxima(values) -> int:
    """Number of local maxima of a 1-D profile"""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise ValueError("fringe counting needs a one-dimensional profile")
    if values.size == 1:
        return 1
    return int(_row_maxima(values).sum())


def fringe_visibility(
    rho: DensityMatrix,
    params: PhysicalParams,
    theta: float,
    n_phi: int = VISIBILITY_PROFILE_POINTS,
) -> float:
    """(I_max - I_min)/(I_max + I_min) along the fixed-theta ring, phi in [0, pi]"""
    rho.require_physical()
    phi = np.linspace(0.0, math.pi, n_phi)

    def profile(p):
        return intensity_field(rho, params, unit_vectors(theta, p))

    values = profile(phi)
    step = phi[1] - phi[0] if n_phi > 1 else math.pi

    def refine(index: int, sign: float) -> float:
        """Polish a grid extremum; sign=+1 for a minimum, -1 for a maximum"""
        lo = max(phi[index] - step, 0.0)
        hi = min(phi[index] + step, math.pi)
        best = sign * float(values[index])
        if hi > lo:
            result = minimize_scalar(
                lambda p: sign * float(profile(p)),
                bounds=(lo, hi),
                method="bounded",
                options={"xatol": 1e-12},
            )
            best = min(best, float(result.fun))
        return sign * best

    i_max = refine(int(np.argmax(values)), -1.0)
    i_min = refine(int(np.argmin(values)), 1.0)
    if i_max + i_min <= 0.0:
        return 0.0
    return (i_max - i_min) / (i_max + i_min)


def g2_total(rho: DensityMatrix, params: PhysicalParams, coupling: DipoleCoupling = None) -> float:
    """Zero-delay correlation of photons detected in any direction"""
    rho.require_physical()
    once = jump_superoperator(rho.entries, params, coupling)
    rate = float(np.trace(once).real)
    if rate < UNDEFINED_INTENSITY:
        return math.nan
    twice = jump_superoperator(once, params, coupling)
    return float(np.trace(twice).real) / rate ** 2


@dataclass(frozen=True)
class BunchingReport:
    """What a detection in one direction does to the next detection rate"""

    direction: Direction
    pre_jump_intensity: float
    post_jump_state: Optional[DensityMatrix]
    post_jump_intensity: float
    g2: float

    def to_dict(self) -> dict:
        return {
            "theta": self.direction.theta,
            "phi": self.direction.phi,
            "pre_jump_intensity": self.pre_jump_intensity,
            "post_jump_intensity": self.post_jump_intensity,
            "g2": self.g2,
        }


def bunching_mechanism(rho: DensityMatrix, params: PhysicalParams, k: Direction) -> BunchingReport:
    pre_jump = intensity_mixed(rho, k, params)
    if pre_jump < UNDEFINED_INTENSITY:
        return BunchingReport(k, pre_jump, None, math.nan, math.nan)
    reset = reset_operator(params, k).total
    post_state = DensityMatrix(reset @ rho.entries @ reset.conj().T / pre_jump)
    post_jump = intensity_mixed(post_state, k, params)
    return BunchingReport(k, pre_jump, post_state, post_jump, post_jump / pre_jump)


def maximal_bunching_direction(params: PhysicalParams, theta: float) -> Optional[Direction]:
    """Smallest phi in [0, pi/2] with cos(k0 r sin(theta) cos(phi)) = -1"""
    span = params.k0r * math.sin(theta)
    if span < math.pi:
        return None
    # largest odd multiple of pi not exceeding span gives the largest cos(phi)
    m = math.floor((span / math.pi - 1.0) / 2.0)
    cos_phi = (2 * m + 1) * math.pi / span
    return Direction(theta=theta, phi=math.acos(min(cos_phi, 1.0)))


def _closed_form_drive(params: PhysicalParams) -> float:
    if not params.equal_real_drive:
        raise ClosedFormNotApplicable("closed forms need equal real Rabi frequencies")
    return params.rabi_1.real


def closed_form_pattern(params: PhysicalParams, theta, phi) -> np.ndarray:
    """Steady-state rate density for independent atoms (C neglected), dipole along z"""
    omega = _closed_form_drive(params)
    if abs(abs(params.dipole[2]) - 1.0) > 1e-12:
        raise ClosedFormNotApplicable(
            f"closed-form pattern assumes a dipole along z, got {tuple(params.dipole)}"
        )
    A = params.decay_rate_A
    drive = A ** 2 + 2.0 * omega ** 2
    theta = np.asarray(theta, dtype=float)
    prefactor = 2.0 * dipole_prefactor(params) * omega ** 2 / drive ** 2
    return prefactor * np.sin(theta) ** 2 * (drive + A ** 2 * np.cos(_xi(params, theta, phi)))


def closed_form_g2(params: PhysicalParams, theta, phi) -> np.ndarray:
    """[1 - cos(xi)/(1 + 2(Omega/A)^2 + cos(xi))]^2, NaN where undefined"""
    omega = _closed_form_drive(params)
    w2 = (omega / params.decay_rate_A) ** 2
    cos_xi = np.cos(_xi(params, np.asarray(theta, dtype=float), phi))
    denominator = 1.0 + 2.0 * w2 + cos_xi
    defined = np.abs(denominator) > UNDEFINED_INTENSITY
    safe = np.where(defined, denominator, 1.0)
    return np.where(defined, (1.0 - cos_xi / safe) ** 2, np.nan)


def neglected_coupling_params(params: PhysicalParams) -> PhysicalParams:
    """Same system with the dipole-dipole coupling switched off"""
    return params.model_copy(update={"include_coupling": False})
