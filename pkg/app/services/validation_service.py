"""Self-consistency checks run by the validate command."""
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List

import numpy as np
from scipy import stats

from app.models.physics import DensityMatrix, Direction, PhysicalParams, PureState
from app.services.dynamics_service import DipoleCoupling, dipole_coupling
from app.services.emission_service import integrated_reset_map, jump_superoperator
from app.services.master_service import (
    analytic_populations,
    build_liouvillian,
    dicke_populations,
    integrate,
    steady_state_numeric,
)
from app.services.observables_service import (
    AngularGrid,
    bunching_map,
    closed_form_g2,
    closed_form_pattern,
    fringe_visibility,
    g2_zero,
    interference_criterion,
    interference_pattern,
    maximal_bunching_direction,
    neglected_coupling_params,
)
from app.services.trajectory_service import TrajectoryService, first_jump_times
from app.utils.logger import logger

STRONG_COUPLING_R = 1.0 / math.pi
FAMILY_FALSE_ALARM = 0.01
MASTER_REFERENCE_DT = 1e-3


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: Dict[str, Any] = field(default_factory=dict)
    seconds: float = 0.0

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name} ({self.seconds:.1f}s)"


@dataclass
class ValidationReport:
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "details": c.details}
                for c in self.checks
            ],
        }


def random_density_matrix(rng: np.random.Generator) -> DensityMatrix:
    """Full-rank state G G^dagger / Tr from a complex Gaussian G"""
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    rho = g @ g.conj().T
    return DensityMatrix(rho / np.trace(rho).real)


def sigma_threshold(comparisons: int, family_false_alarm: float = FAMILY_FALSE_ALARM) -> float:
    """Two-sided z bound keeping the family-wise false alarm rate fixed, never below 3"""
    per_comparison = 1.0 - (1.0 - family_false_alarm) ** (1.0 / comparisons)
    return max(3.0, float(stats.norm.isf(per_comparison / 2.0)))


class ValidationService:
    """Cross-checks between the trajectory, master equation and closed-form layers"""

    def __init__(
        self,
        n_trajectories: int = 10_000,
        dt: float = 1e-3,
        seed: int = 0,
        t_final: float = 5.0,
        corrupt_coupling: bool = False,
        trajectory_service: TrajectoryService = None,
    ):
        self.n_trajectories = n_trajectories
        self.dt = dt
        self.seed = seed
        self.t_final = t_final
        self.corrupt_coupling = corrupt_coupling
        self.trajectories = trajectory_service or TrajectoryService()

    def quadrature_identity(self, n_states: int = 20, tolerance: float = 1e-6) -> Dict[str, Any]:
        """Sphere integral of R_k rho R_k^dagger against the two-operator jump form"""
        rng = np.random.default_rng(self.seed)
        worst = 0.0
        for r in (STRONG_COUPLING_R, 1.0, 10.0):
            params = PhysicalParams(separation_r=r)
            coupling = dipole_coupling(params)
            if self.corrupt_coupling:
                coupling = DipoleCoupling(-coupling.value_C)
            for _ in range(n_states):
                rho = random_density_matrix(rng).entries
                quadrature = integrated_reset_map(rho, params)
                collective = jump_superoperator(rho, params, coupling)
                worst = max(worst, float(np.max(np.abs(quadrature - collective))))
        return {"passed": worst < tolerance, "max_deviation": worst, "tolerance": tolerance}

    def steady_state_closed_form(self, tolerance: float = 1e-8) -> Dict[str, Any]:
        """Closed-form Dicke populations against the Liouvillian kernel on a grid of (omega, r)"""
        worst = 0.0
        for omega in (0.1, 0.3, 1.0, 3.0, 10.0):
            for r in (STRONG_COUPLING_R, 0.5, 1.0, 3.0, 10.0):
                params = PhysicalParams.driven(omega, r)
                numeric = dicke_populations(steady_state_numeric(build_liouvillian(params)))
                analytic = analytic_populations(params)
                for label, value in zip("gsae", (analytic.gg, analytic.ss, analytic.aa, analytic.ee)):
                    worst = max(worst, abs(numeric[label] - value))
        return {"passed": worst < tolerance, "max_deviation": worst, "tolerance": tolerance}

    def interference_closed_form(self) -> Dict[str, Any]:
        """Pattern of the numeric steady state against the independent-atom closed form"""
        physical = PhysicalParams.driven(0.3, 10.0)
        neglected = neglected_coupling_params(physical)
        grid = AngularGrid.sphere()
        theta, phi = np.meshgrid(grid.theta_points, grid.phi_points, indexing="ij")
        oracle = closed_form_pattern(neglected, theta, phi)

        zeroed = interference_pattern(
            steady_state_numeric(build_liouvillian(neglected)), neglected, grid
        ).values
        # the sin^2 factor leaves only rounding noise at the poles
        lit = oracle > 1e-12
        relative = float(np.max(np.abs(zeroed - oracle)[lit] / oracle[lit]))
        relative = max(relative, float(np.max(np.abs(zeroed[~lit] - oracle[~lit]), initial=0.0)))
        full = interference_pattern(
            steady_state_numeric(build_liouvillian(physical)), physical, grid
        ).values
        coupled = float(np.max(np.abs(full - oracle)[lit] / oracle[lit]))
        coupled = max(coupled, float(np.max(np.abs(full[~lit] - oracle[~lit]), initial=0.0)))
        return {
            "passed": relative < 1e-10 and coupled < 0.02,
            "neglected_coupling_relative": relative,
            "physical_coupling_relative": coupled,
        }

    def visibility(self) -> Dict[str, Any]:
        params = neglected_coupling_params(PhysicalParams.driven(0.3, 10.0))
        rho = steady_state_numeric(build_liouvillian(params))
        value = fringe_visibility(rho, params, math.pi / 2)
        expected = 1.0 / (1.0 + 2.0 * 0.3 ** 2)
        return {"passed": abs(value - expected) < 1e-6, "visibility": value, "expected": expected}

    def which_way(self) -> Dict[str, Any]:
        """Flat pattern at theta = pi/2 exactly when the exchange coherence vanishes"""
        params = PhysicalParams(separation_r=10.0)
        grid = AngularGrid.ring(math.pi / 2, np.linspace(0.0, 2.0 * math.pi, 512, endpoint=False))
        flat_scale = 1e-9 * 3.0 * params.decay_rate_A / (8.0 * math.pi)
        outcomes = {}
        for label, state in (
            ("s", PureState.dicke("s")),
            ("a", PureState.dicke("a")),
            ("21", PureState.basis("21")),
            ("e", PureState.dicke("e")),
        ):
            pattern = interference_pattern(state.density(), params, grid).values
            flat = bool(np.ptp(pattern) < flat_scale)
            _, coherent = interference_criterion(state)
            outcomes[label] = {"flat": flat, "coherent": coherent, "consistent": flat != coherent}
        return {"passed": all(o["consistent"] for o in outcomes.values()), "states": outcomes}

    def g2_closed_form(self) -> Dict[str, Any]:
        params = neglected_coupling_params(PhysicalParams.driven(0.3, 10.0))
        rho = steady_state_numeric(build_liouvillian(params))
        phi = np.linspace(0.0, math.pi, 1001)
        pipeline = bunching_map(rho, params, AngularGrid.ring(math.pi / 2, phi)).values[0]
        oracle = closed_form_g2(params, math.pi / 2, phi)
        relative = float(np.nanmax(np.abs(pipeline - oracle) / oracle))

        peak_direction = maximal_bunching_direction(params, math.pi / 2)
        peak = g2_zero(rho, params, peak_direction)
        trough = g2_zero(rho, params, Direction(theta=math.pi / 2, phi=0.0))
        w2 = 2.0 * 0.3 ** 2
        expected_peak = (1.0 + 1.0 / w2) ** 2
        expected_trough = (1.0 - 1.0 / (2.0 + w2)) ** 2
        return {
            "passed": (
                relative < 1e-8
                and abs(peak - expected_peak) < 0.01
                and abs(trough - expected_trough) < 1e-4
            ),
            "max_relative_deviation": relative,
            "peak": peak,
            "trough": trough,
        }

    def trajectory_vs_master(self, checkpoints: int = 5) -> Dict[str, Any]:
        """Ensemble mean of |psi><psi| against RK4 integration of the master equation"""
        params = PhysicalParams.driven(0.3, STRONG_COUPLING_R)
        initial = PureState.basis("11")
        times = np.linspace(self.t_final / checkpoints, self.t_final, checkpoints)
        snapshots = int(round(self.t_final / self.dt)) + 1
        stats_ = self.trajectories.run_ensemble(
            params, initial, self.t_final, self.dt, self.n_trajectories, self.seed,
            n_snapshots=min(snapshots, 1001),
        )
        reference = integrate(
            initial.density(), self.t_final, MASTER_REFERENCE_DT, build_liouvillian(params), times
        )

        # 16 real parameters per Hermitian 4x4 matrix
        threshold = sigma_threshold(16 * checkpoints)
        worst_z = 0.0
        for t, expected in zip(reference.times, reference.states):
            i = int(np.argmin(np.abs(stats_.times - t)))
            delta = stats_.mean_density[i] - expected.entries
            stderr = stats_.density_stderr[i]
            for part, err in ((delta.real, stderr.real), (delta.imag, stderr.imag)):
                z = np.abs(part) / np.maximum(err, 1e-12)
                z[np.abs(part) < 1e-9] = 0.0
                worst_z = max(worst_z, float(np.max(z)))
        return {
            "passed": worst_z < threshold,
            "max_standard_errors": worst_z,
            "threshold": threshold,
            "n_trajectories": self.n_trajectories,
            "dt": self.dt,
        }

    def waiting_times(self, p_floor: float = 0.01) -> Dict[str, Any]:
        """First-emission times from |s> and |a> against exponentials with rates A +/- Re C"""
        params = PhysicalParams(separation_r=STRONG_COUPLING_R)
        re_c = dipole_coupling(params).real
        results = {}
        for label, rate in (("s", 1.0 + re_c), ("a", 1.0 - re_c)):
            horizon = 12.0 / rate
            stats_ = self.trajectories.run_ensemble(
                params, PureState.dicke(label), horizon, self.dt, self.n_trajectories,
                self.seed, n_snapshots=2, keep_records=True,
            )
            waits = first_jump_times(stats_.records)
            censored = 1.0 - math.exp(-rate * horizon)
            outcome = stats.kstest(waits, lambda t: (1.0 - np.exp(-rate * t)) / censored)
            results[label] = {"rate": rate, "p_value": float(outcome.pvalue), "jumps": len(waits)}
        return {
            "passed": all(r["p_value"] > p_floor for r in results.values()),
            "states": results,
        }

    def checks(self) -> Dict[str, Callable[[], Dict[str, Any]]]:
        return {
            "quadrature_identity": self.quadrature_identity,
            "steady_state_closed_form": self.steady_state_closed_form,
            "interference_closed_form": self.interference_closed_form,
            "visibility": self.visibility,
            "which_way_criterion": self.which_way,
            "g2_closed_form": self.g2_closed_form,
            "trajectory_vs_master": self.trajectory_vs_master,
            "waiting_times": self.waiting_times,
        }

    def run_suite(self) -> ValidationReport:
        results = []
        for name, check in self.checks().items():
            started = time.perf_counter()
            details = check()
            passed = bool(details.pop("passed"))
            elapsed = time.perf_counter() - started
            log = logger.info if passed else logger.error
            log(f"validation check {name}: {'passed' if passed else 'FAILED'} in {elapsed:.1f}s")
            results.append(CheckResult(name, passed, details, elapsed))
        return ValidationReport(results)
