"""Ensemble dynamics: the Liouvillian, RK4 integration and steady states."""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from app.config import settings
from app.models.physics import DICKE_LABELS, DensityMatrix, PhysicalParams
from app.services.dynamics_service import (
    DipoleCoupling,
    conditional_hamiltonian,
    effective_coupling,
)
from app.services.operators import DICKE_MATRIX, IDENTITY, R_MINUS, R_PLUS, to_dicke_operator
from app.utils.errors import ClosedFormNotApplicable, SolverError
from app.utils.logger import logger

MAX_DT = 1e-2
TRACE_DRIFT_LIMIT = 1e-8
MAX_HALVINGS = 10
KERNEL_TOLERANCE = 1e-9

# Column stacking: vec(X)[i + 4j] = X[i, j]
_VEC_IDENTITY = IDENTITY.reshape(-1, order="F")


def vectorize(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvectorize(vec: np.ndarray) -> np.ndarray:
    return np.asarray(vec).reshape(4, 4, order="F")


@dataclass(frozen=True)
class Liouvillian:
    """16x16 generator acting on column-stacked density matrices"""

    superoperator: np.ndarray

    def trace_row(self) -> np.ndarray:
        """Row giving d Tr(rho)/dt; zero for a trace-preserving generator"""
        return _VEC_IDENTITY @ self.superoperator


def build_liouvillian(params: PhysicalParams, coupling: DipoleCoupling = None) -> Liouvillian:
    """L(rho) = -i(H rho - rho H^dag) + (A + Re C) R+ rho R+^dag + (A - Re C) R- rho R-^dag"""
    if coupling is None:
        coupling = effective_coupling(params)
    H = conditional_hamiltonian(params, coupling).matrix
    A = params.decay_rate_A
    re_c = coupling.real

    # vec(X rho Y) = (Y^T kron X) vec(rho)
    generator = -1j * (np.kron(IDENTITY, H) - np.kron(H.conj(), IDENTITY))
    for rate, jump in ((A + re_c, R_PLUS), (A - re_c, R_MINUS)):
        generator = generator + rate * np.kron(jump.conj(), jump)

    logger.debug(f"built Liouvillian for C={coupling.value_C:.6g}")
    return Liouvillian(generator)


def apply_liouvillian(liouvillian: Liouvillian, rho: np.ndarray) -> np.ndarray:
    return unvectorize(liouvillian.superoperator @ vectorize(rho))


@dataclass(frozen=True)
class IntegrationResult:
    times: np.ndarray
    states: List[DensityMatrix]

    def at(self, t: float) -> DensityMatrix:
        """Snapshot closest to time t"""
        return self.states[int(np.argmin(np.abs(self.times - t)))]


def _rk4_step_matrix(generator: np.ndarray, h: float) -> np.ndarray:
    """Classic RK4 applied to a linear time-independent system, as one matrix"""
    hl = h * generator
    hl2 = hl @ hl
    hl3 = hl2 @ hl
    return np.eye(generator.shape[0]) + hl + hl2 / 2.0 + hl3 / 6.0 + hl3 @ hl / 24.0


class _RK4Stepper:
    def __init__(self, generator: np.ndarray, dt: float):
        self.generator = generator
        self.dt = dt
        self._matrices: Dict[int, np.ndarray] = {}

    def _matrix(self, halvings: int) -> np.ndarray:
        if halvings not in self._matrices:
            self._matrices[halvings] = _rk4_step_matrix(self.generator, self.dt / 2 ** halvings)
        return self._matrices[halvings]

    def step(self, vec: np.ndarray, halvings: int = 0) -> np.ndarray:
        if halvings > MAX_HALVINGS:
            raise SolverError(f"trace drift persists after {MAX_HALVINGS} step halvings")
        before = _VEC_IDENTITY @ vec
        after = self._matrix(halvings) @ vec
        if abs(_VEC_IDENTITY @ after - before) <= TRACE_DRIFT_LIMIT:
            return after
        logger.warning(f"RK4 trace drift at dt/{2 ** halvings}; halving the step")
        half = self.step(vec, halvings + 1)
        return self.step(half, halvings + 1)


def integrate(
    rho0: DensityMatrix,
    t_final: float,
    dt: float,
    liouvillian: Liouvillian,
    snapshot_times: Optional[Sequence[float]] = None,
) -> IntegrationResult:
    """Fixed-step RK4 integration of the master equation from rho0"""
    rho0.require_physical()
    if not 0 < dt <= MAX_DT:
        raise ValueError(f"dt must lie in (0, {MAX_DT}], got {dt}")
    if t_final < 0:
        raise ValueError(f"t_final must be non-negative, got {t_final}")

    n_steps = int(round(t_final / dt))
    if n_steps and abs(n_steps * dt - t_final) > 1e-9 * max(1.0, t_final):
        dt = t_final / n_steps
        logger.info(f"adjusted dt to {dt:.6g} to land on t_final")

    if snapshot_times is None:
        snapshot_times = np.linspace(0.0, t_final, settings.DEFAULT_SNAPSHOT_POINTS)
    wanted = sorted({int(round(t / dt)) if dt else 0 for t in snapshot_times})
    wanted = [min(max(step, 0), n_steps) for step in wanted]

    stepper = _RK4Stepper(liouvillian.superoperator, dt)
    vec = vectorize(rho0.entries)
    times, states = [], []
    cursor = 0
    for step in range(n_steps + 1):
        while cursor < len(wanted) and wanted[cursor] == step:
            snapshot = DensityMatrix(unvectorize(vec))
            violation = snapshot.physical_violation()
            if violation:
                raise SolverError(f"integration snapshot at t={step * dt:.6g} is {violation}")
            times.append(step * dt)
            states.append(snapshot)
            cursor += 1
        if step < n_steps:
            vec = stepper.step(vec)

    return IntegrationResult(np.array(times), states)


def steady_state_numeric(liouvillian: Liouvillian) -> DensityMatrix:
    """Solve L(rho) = 0 with Tr(rho) = 1, trace constraint in place of the first equation"""
    generator = liouvillian.superoperator
    singular_values = np.linalg.svd(generator, compute_uv=False)
    scale = max(1.0, float(singular_values[0]))
    kernel_dimension = int(np.sum(singular_values < KERNEL_TOLERANCE * scale))
    if kernel_dimension != 1:
        raise SolverError(
            f"Liouvillian kernel has dimension {kernel_dimension}; steady state is not unique"
        )

    system = generator.copy()
    system[0, :] = _VEC_IDENTITY
    rhs = np.zeros(generator.shape[0], dtype=complex)
    rhs[0] = 1.0
    rho = unvectorize(np.linalg.solve(system, rhs))
    rho = 0.5 * (rho + rho.conj().T)
    steady = DensityMatrix(rho)
    violation = steady.physical_violation()
    if violation:
        raise SolverError(f"steady state is {violation}")
    logger.info("solved steady state from Liouvillian kernel")
    return steady


def dicke_elements(rho: DensityMatrix) -> np.ndarray:
    """rho in the Dicke basis, rows and columns ordered (g, s, a, e)"""
    return to_dicke_operator(rho.entries)


def dicke_populations(rho: DensityMatrix) -> Dict[str, float]:
    diagonal = np.real(np.diag(dicke_elements(rho)))
    return {label: float(p) for label, p in zip(DICKE_LABELS, diagonal)}


@dataclass(frozen=True)
class AnalyticPopulations:
    """Closed-form steady-state quantities for equal real driving"""

    gg: float
    ss: float
    aa: float
    ee: float
    im_sa: float
    normalization: float

    def as_dict(self) -> Dict[str, float]:
        return {"g": self.gg, "s": self.ss, "a": self.aa, "e": self.ee, "im_sa": self.im_sa}


def analytic_populations(params: PhysicalParams, coupling: DipoleCoupling = None) -> AnalyticPopulations:
    if coupling is None:
        coupling = effective_coupling(params)
    if not params.equal_real_drive:
        raise ClosedFormNotApplicable(
            "closed-form steady state needs equal real Rabi frequencies on both atoms"
        )
    A = params.decay_rate_A
    omega = params.rabi_1.real
    re_c, im_c = coupling.real, coupling.imag
    coupling_terms = A ** 2 * (2 * A + re_c) * re_c + A ** 2 * im_c ** 2

    N = (A ** 2 + 2 * omega ** 2) ** 2 + coupling_terms
    return AnalyticPopulations(
        gg=((A ** 2 + omega ** 2) ** 2 + coupling_terms) / N,
        ss=omega ** 2 * (2 * A ** 2 + omega ** 2) / N,
        aa=omega ** 4 / N,
        ee=omega ** 4 / N,
        im_sa=0.0,
        normalization=N,
    )


def steady_state_analytic(params: PhysicalParams, coupling: DipoleCoupling = None) -> DensityMatrix:
    """Closed-form populations with the remaining coherences from the numeric solver"""
    if coupling is None:
        coupling = effective_coupling(params)
    populations = analytic_populations(params, coupling)

    numeric = steady_state_numeric(build_liouvillian(params, coupling))
    dicke = dicke_elements(numeric).copy()
    for index, value in enumerate((populations.gg, populations.ss, populations.aa, populations.ee)):
        dicke[index, index] = value
    s, a = DICKE_LABELS.index("s"), DICKE_LABELS.index("a")
    dicke[s, a] = dicke[s, a].real
    dicke[a, s] = dicke[s, a]
    return DensityMatrix(DICKE_MATRIX @ dicke @ DICKE_MATRIX.conj().T)
