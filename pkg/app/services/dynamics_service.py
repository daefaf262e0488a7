"""No-emission evolution: dipole coupling, conditional Hamiltonian, propagator."""
import cmath
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from app.models.physics import PhysicalParams, PureState
from app.services.operators import (
    EXCITED_1,
    EXCITED_2,
    EXCHANGE_21,
    IDENTITY,
    S1_PLUS,
    S2_PLUS,
)
from app.utils.logger import logger

MIN_SEPARATION = 1e-6
VALIDATED_SEPARATION = 0.1
EIGENBASIS_CONDITION_LIMIT = 1e8


@dataclass(frozen=True)
class DipoleCoupling:
    """Complex dipole-dipole coupling constant C in units of A"""

    value_C: complex

    @property
    def real(self) -> float:
        return self.value_C.real

    @property
    def imag(self) -> float:
        return self.value_C.imag

    @classmethod
    def neglected(cls) -> "DipoleCoupling":
        return cls(0j)


@dataclass(frozen=True)
class ConditionalHamiltonian:
    """Non-Hermitian generator of the no-photon evolution (hbar = 1)"""

    matrix: np.ndarray

    def decay_operator(self) -> np.ndarray:
        """i(H - H^dagger) = A (S+1 S-1 + S+2 S-2) + Re C (S+2 S-1 + S+1 S-2)"""
        return 1j * (self.matrix - self.matrix.conj().T)

    def decay_widths(self) -> np.ndarray:
        return np.sort(np.linalg.eigvalsh(self.decay_operator()))


@lru_cache(maxsize=None)
def _warn_unvalidated_separation(r: float) -> None:
    """Logged once per separation; trajectories evaluate C at every jump"""
    logger.warning(
        f"separation_r={r} < {VALIDATED_SEPARATION}: outside the range where the "
        "second-order coupling is validated"
    )


def dipole_coupling(params: PhysicalParams) -> DipoleCoupling:
    """Evaluate C for the atom separation and dipole orientation in params"""
    r = params.separation_r
    if r <= MIN_SEPARATION:
        raise ValueError(
            f"separation_r={r} is below {MIN_SEPARATION}; the coupling diverges at contact"
        )
    if r < VALIDATED_SEPARATION:
        _warn_unvalidated_separation(r)

    x = params.k0r
    projection = abs(float(np.dot(params.dipole, params.axis))) ** 2
    bracket = (1.0 / (1j * x)) * (1.0 - projection) + (
        1.0 / x ** 2 - 1.0 / (1j * x ** 3)
    ) * (1.0 - 3.0 * projection)
    value = 1.5 * params.decay_rate_A * cmath.exp(1j * x) * bracket
    return DipoleCoupling(complex(value))


def effective_coupling(params: PhysicalParams) -> DipoleCoupling:
    """C honoring the include_coupling toggle"""
    if not params.include_coupling:
        return DipoleCoupling.neglected()
    return dipole_coupling(params)


def conditional_hamiltonian(
    params: PhysicalParams, coupling: DipoleCoupling = None
) -> ConditionalHamiltonian:
    """H_cond with resonant laser driving in the rotating frame"""
    if coupling is None:
        coupling = effective_coupling(params)
    A = params.decay_rate_A
    C = coupling.value_C

    exchange = EXCHANGE_21 + EXCHANGE_21.conj().T
    dissipative = (A * (EXCITED_1 + EXCITED_2) + C * exchange) / 2j

    laser = 0.5 * (params.rabi_1 * S1_PLUS + params.rabi_2 * S2_PLUS)
    laser = laser + laser.conj().T

    return ConditionalHamiltonian(dissipative + laser)


def no_jump_propagator(h: ConditionalHamiltonian, dt: float) -> np.ndarray:
    """U_cond(dt) = exp(-i H_cond dt)"""
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    if dt == 0:
        return IDENTITY.copy()

    eigenvalues, vectors = np.linalg.eig(h.matrix)
    condition = np.linalg.cond(vectors)
    if not np.isfinite(condition) or condition > EIGENBASIS_CONDITION_LIMIT:
        logger.warning(
            f"eigenbasis of H_cond is ill-conditioned (cond={condition:.2e}); "
            "using scaling-and-squaring"
        )
        return expm(-1j * h.matrix * dt)

    phases = np.exp(-1j * eigenvalues * dt)
    return (vectors * phases) @ np.linalg.inv(vectors)


def no_emission_probability(state: PureState, u: np.ndarray) -> float:
    """P0 = ||U_cond |psi>||^2 for a normalized |psi>"""
    state.require_normalized()
    evolved = u @ state.amplitudes
    return float(np.vdot(evolved, evolved).real)
