"""Value types shared by all services.

Units are dimensionless throughout: times in 1/A, rates in A, lengths in
the transition wavelength, so k0*r = 2*pi*separation_r.
"""
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from app.utils.errors import NonPhysicalStateError, NormalizationError

NORM_TOLERANCE = 1e-10
HERMITIAN_TOLERANCE = 1e-10
TRACE_TOLERANCE = 1e-9
POSITIVITY_TOLERANCE = 1e-9

# Product basis |ij>, atom 1 in level i, atom 2 in level j (1 = ground, 2 = excited)
BASIS_LABELS = ("11", "12", "21", "22")
DICKE_LABELS = ("g", "s", "a", "e")


class PhysicalParams(BaseModel):
    """All physical constants of the two-atom system"""

    model_config = ConfigDict(frozen=True)

    decay_rate_A: float = 1.0
    rabi_1: complex = 0j
    rabi_2: complex = 0j
    separation_r: float = 1.0
    dipole_orientation: Tuple[float, float, float] = (0.0, 0.0, 1.0)
    include_coupling: bool = True

    @field_validator("decay_rate_A")
    @classmethod
    def validate_decay_rate(cls, v):
        if not v > 0:
            raise ValueError("decay_rate_A must be positive")
        return v

    @field_validator("separation_r")
    @classmethod
    def validate_separation(cls, v):
        if not v > 0:
            raise ValueError("separation_r must be positive")
        return v

    @field_validator("dipole_orientation")
    @classmethod
    def validate_dipole(cls, v):
        norm = math.sqrt(sum(c * c for c in v))
        if norm == 0.0:
            raise ValueError("dipole_orientation must be a non-zero vector")
        return tuple(c / norm for c in v)

    @classmethod
    def driven(cls, omega: float, separation_r: float, **kwargs) -> "PhysicalParams":
        """Both atoms driven by the same real Rabi frequency"""
        return cls(rabi_1=omega, rabi_2=omega, separation_r=separation_r, **kwargs)

    @property
    def k0r(self) -> float:
        return 2.0 * math.pi * self.separation_r

    @property
    def dipole(self) -> np.ndarray:
        return np.array(self.dipole_orientation, dtype=float)

    @property
    def atom_positions(self) -> np.ndarray:
        """Rows r1 = (-r/2, 0, 0) and r2 = (+r/2, 0, 0), in units of the wavelength"""
        half = 0.5 * self.separation_r
        return np.array([[-half, 0.0, 0.0], [half, 0.0, 0.0]])

    @property
    def axis(self) -> np.ndarray:
        return np.array([1.0, 0.0, 0.0])

    @property
    def equal_real_drive(self) -> bool:
        return (
            self.rabi_1 == self.rabi_2
            and self.rabi_1.imag == 0.0
        )


class Direction(BaseModel):
    """Emission direction on the unit sphere (polar theta, azimuth phi)"""

    model_config = ConfigDict(frozen=True)

    theta: float
    phi: float = 0.0

    @field_validator("theta")
    @classmethod
    def validate_theta(cls, v):
        if not 0.0 <= v <= math.pi:
            raise ValueError("theta must lie in [0, pi]")
        return v

    @field_validator("phi")
    @classmethod
    def wrap_phi(cls, v):
        wrapped = math.fmod(v, 2.0 * math.pi)
        if wrapped < 0.0:
            wrapped += 2.0 * math.pi
        # fmod of a value just below 2*pi can round up to it
        return 0.0 if wrapped >= 2.0 * math.pi else wrapped

    def unit_vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])

    @classmethod
    def from_vector(cls, v) -> "Direction":
        v = np.asarray(v, dtype=float)
        v = v / np.linalg.norm(v)
        theta = math.acos(max(-1.0, min(1.0, float(v[2]))))
        phi = math.atan2(float(v[1]), float(v[0]))
        return cls(theta=theta, phi=phi)


@dataclass(frozen=True)
class PureState:
    """Four complex amplitudes in the ordered basis (|11>, |12>, |21>, |22>)"""

    amplitudes: np.ndarray
    normalized: bool = field(default=True)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(4).copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)
        if self.normalized and abs(self.norm_squared - 1.0) > NORM_TOLERANCE:
            raise NormalizationError(
                f"state flagged normalized has squared norm {self.norm_squared:.3e}"
            )

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def require_normalized(self) -> "PureState":
        if abs(self.norm_squared - 1.0) > NORM_TOLERANCE:
            raise NormalizationError(
                f"normalized state required, squared norm is {self.norm_squared:.3e}"
            )
        return self

    def normalize(self) -> "PureState":
        norm = math.sqrt(self.norm_squared)
        if norm == 0.0:
            raise NormalizationError("cannot normalize the zero vector")
        return PureState(self.amplitudes / norm)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    @classmethod
    def unnormalized(cls, amplitudes) -> "PureState":
        return cls(amplitudes, normalized=False)

    @classmethod
    def basis(cls, label: str) -> "PureState":
        """Product basis state, e.g. "21" = atom 1 excited, atom 2 ground"""
        amps = np.zeros(4, dtype=complex)
        amps[BASIS_LABELS.index(label)] = 1.0
        return cls(amps)

    @classmethod
    def dicke(cls, label: str) -> "PureState":
        """Dicke state g, s, a or e expressed in the product basis"""
        from app.services.operators import DICKE_MATRIX
        return cls(DICKE_MATRIX[:, DICKE_LABELS.index(label)])


@dataclass(frozen=True)
class DensityMatrix:
    """4x4 ensemble state in the product basis"""

    entries: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=complex).reshape(4, 4).copy()
        rho.flags.writeable = False
        object.__setattr__(self, "entries", rho)

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def physical_violation(self) -> str:
        """Empty string when physical, otherwise the first violated condition"""
        rho = self.entries
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOLERANCE:
            return "not Hermitian"
        if abs(self.trace - 1.0) > TRACE_TOLERANCE:
            return f"trace {self.trace.real:.12f} != 1"
        min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
        if min_eig < -POSITIVITY_TOLERANCE:
            return f"negative eigenvalue {min_eig:.3e}"
        return ""

    @property
    def is_physical(self) -> bool:
        return not self.physical_violation()

    def require_physical(self) -> "DensityMatrix":
        violation = self.physical_violation()
        if violation:
            raise NonPhysicalStateError(f"density matrix is {violation}")
        return self

    def expectation(self, operator: np.ndarray) -> complex:
        return complex(np.trace(operator @ self.entries))
