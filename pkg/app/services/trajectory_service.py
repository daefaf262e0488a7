"""Monte Carlo quantum-jump trajectories with direction-resolved emissions."""
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.config import settings
from app.models.physics import Direction, PhysicalParams, PureState
from app.services.dynamics_service import conditional_hamiltonian, no_jump_propagator
from app.services.emission_service import apply_reset, sample_direction
from app.utils.errors import ZeroRateError
from app.utils.hashing import hash_state
from app.utils.logger import logger

VALIDATED_DT = 1e-3
UNIFORM_BLOCK = 1024
MAX_RESET_RETRIES = 16

JUMP_STREAM = 0
DIRECTION_STREAM = 1


def trajectory_rng(base_seed: int, index: int, stream: int) -> np.random.Generator:
    """Counter-based generator for one trajectory and one purpose"""
    sequence = np.random.SeedSequence(entropy=base_seed, spawn_key=(index, stream))
    return np.random.Generator(np.random.Philox(sequence))


@dataclass(frozen=True)
class JumpEvent:
    time: float
    direction: Direction
    pre_jump_hash: str
    post_jump: PureState


@dataclass
class TrajectoryRecord:
    """One stochastic realization"""

    seed: int
    index: int
    jumps: List[JumpEvent] = field(default_factory=list)
    snapshots: List[Tuple[float, PureState]] = field(default_factory=list)
    final_state: Optional[PureState] = None

    @property
    def jump_times(self) -> np.ndarray:
        return np.array([jump.time for jump in self.jumps])

    def to_json(self) -> Dict:
        final = self.final_state.amplitudes if self.final_state is not None else []
        return {
            "seed": self.seed,
            "index": self.index,
            "jumps": [
                [jump.time, jump.direction.theta, jump.direction.phi] for jump in self.jumps
            ],
            "final_state": [[float(z.real), float(z.imag)] for z in final],
        }


@dataclass
class EnsembleStats:
    """Aggregates over N trajectories on a common time grid"""

    times: np.ndarray
    mean_density: np.ndarray
    density_stderr: np.ndarray
    emission_rate_total: np.ndarray
    direction_histogram: np.ndarray
    theta_edges: np.ndarray
    phi_edges: np.ndarray
    count_N: int
    jump_counts: np.ndarray
    window_jump_counts: np.ndarray
    window: Tuple[float, float]
    records: List[TrajectoryRecord] = field(default_factory=list)

    def mean_jump_rate(self) -> Tuple[float, float]:
        """Mean emissions per unit time over the window, with its standard error"""
        duration = self.window[1] - self.window[0]
        if duration <= 0:
            return 0.0, 0.0
        rates = self.window_jump_counts / duration
        stderr = rates.std(ddof=1) / math.sqrt(len(rates)) if len(rates) > 1 else 0.0
        return float(rates.mean()), float(stderr)


def first_jump_times(records: Sequence[TrajectoryRecord]) -> np.ndarray:
    """Waiting time to the first emission for each record that has one"""
    return np.array([record.jumps[0].time for record in records if record.jumps])


@dataclass(frozen=True)
class _RunPlan:
    params: PhysicalParams
    initial: np.ndarray
    propagator: np.ndarray
    dt: float
    n_steps: int
    base_seed: int
    snapshot_steps: Tuple[int, ...]
    histogram_bins: Tuple[int, int]
    window_start_step: int
    keep_records: bool
    record_snapshots: bool


@dataclass
class _BatchResult:
    density_sum: np.ndarray
    density_sq_re: np.ndarray
    density_sq_im: np.ndarray
    interval_jumps: np.ndarray
    histogram: np.ndarray
    jump_counts: np.ndarray
    window_jump_counts: np.ndarray
    records: List[TrajectoryRecord]

    def merge(self, other: "_BatchResult") -> "_BatchResult":
        return _BatchResult(
            density_sum=self.density_sum + other.density_sum,
            density_sq_re=self.density_sq_re + other.density_sq_re,
            density_sq_im=self.density_sq_im + other.density_sq_im,
            interval_jumps=self.interval_jumps + other.interval_jumps,
            histogram=self.histogram + other.histogram,
            jump_counts=np.concatenate([self.jump_counts, other.jump_counts]),
            window_jump_counts=np.concatenate([self.window_jump_counts, other.window_jump_counts]),
            records=self.records + other.records,
        )


def _tree_reduce(results: List[_BatchResult]) -> _BatchResult:
    """Pairwise reduction with a fixed association order"""
    while len(results) > 1:
        paired = [results[i].merge(results[i + 1]) for i in range(0, len(results) - 1, 2)]
        if len(results) % 2:
            paired.append(results[-1])
        results = paired
    return results[0]


class TrajectoryService:
    """
    Runs single trajectories and ensembles.

    Trajectories are advanced in lockstep batches of fixed width; batch
    partitioning depends only on TRAJECTORY_BATCH_SIZE, so results do not
    depend on the number of worker threads.
    """

    def __init__(self, batch_size: int = None, max_workers: int = None):
        self.batch_size = batch_size or settings.TRAJECTORY_BATCH_SIZE
        self.max_workers = max_workers or settings.worker_count

    def _plan(
        self,
        params: PhysicalParams,
        initial: PureState,
        t_final: float,
        dt: float,
        base_seed: int,
        n_snapshots: int,
        histogram_bins: Tuple[int, int],
        window_start: float,
        keep_records: bool,
        record_snapshots: bool,
    ) -> _RunPlan:
        initial.require_normalized()
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        if t_final < 0:
            raise ValueError(f"t_final must be non-negative, got {t_final}")
        if base_seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if dt * params.decay_rate_A > VALIDATED_DT:
            logger.warning(
                f"dt*A = {dt * params.decay_rate_A:g} exceeds {VALIDATED_DT:g}; "
                "first-order jump decisions are not converged at this step size"
            )

        n_steps = int(round(t_final / dt))
        propagator = no_jump_propagator(conditional_hamiltonian(params), dt)
        snapshot_steps = tuple(
            sorted({int(round(s)) for s in np.linspace(0, n_steps, max(n_snapshots, 2))})
        )
        return _RunPlan(
            params=params,
            initial=initial.amplitudes,
            propagator=propagator,
            dt=dt,
            n_steps=n_steps,
            base_seed=int(base_seed),
            snapshot_steps=snapshot_steps,
            histogram_bins=histogram_bins,
            window_start_step=min(int(round(window_start / dt)), n_steps),
            keep_records=keep_records,
            record_snapshots=record_snapshots,
        )

    def _emit(self, state: PureState, params: PhysicalParams, rng: np.random.Generator):
        """Sample a direction and apply the reset; resample on a vanishing reset vector"""
        for _ in range(MAX_RESET_RETRIES):
            direction = sample_direction(state, params, rng)
            try:
                return direction, apply_reset(state, direction, params)
            except ZeroRateError:
                continue
        raise ZeroRateError("repeatedly sampled directions with vanishing reset vectors")

    def _simulate_batch(self, plan: _RunPlan, indices: Sequence[int]) -> _BatchResult:
        batch = len(indices)
        n_snap = len(plan.snapshot_steps)
        slot_of_step = {step: slot for slot, step in enumerate(plan.snapshot_steps)}
        theta_bins, phi_bins = plan.histogram_bins

        jump_rngs = [trajectory_rng(plan.base_seed, i, JUMP_STREAM) for i in indices]
        direction_rngs = [trajectory_rng(plan.base_seed, i, DIRECTION_STREAM) for i in indices]

        density_sum = np.zeros((n_snap, 4, 4), dtype=complex)
        density_sq_re = np.zeros((n_snap, 4, 4))
        density_sq_im = np.zeros((n_snap, 4, 4))
        interval_jumps = np.zeros(max(n_snap - 1, 1))
        histogram = np.zeros((theta_bins, phi_bins))
        jump_counts = np.zeros(batch, dtype=np.int64)
        window_jump_counts = np.zeros(batch, dtype=np.int64)
        records = [TrajectoryRecord(seed=plan.base_seed, index=i) for i in indices]

        psi = np.tile(plan.initial, (batch, 1))
        propagator_t = plan.propagator.T
        uniforms = np.empty((batch, UNIFORM_BLOCK))

        def take_snapshot(step: int):
            slot = slot_of_step[step]
            outer = psi[:, :, None] * psi[:, None, :].conj()
            density_sum[slot] += outer.sum(axis=0)
            density_sq_re[slot] += (outer.real ** 2).sum(axis=0)
            density_sq_im[slot] += (outer.imag ** 2).sum(axis=0)
            if plan.record_snapshots:
                for row, record in enumerate(records):
                    record.snapshots.append((step * plan.dt, PureState(psi[row])))

        for step in range(plan.n_steps):
            if step in slot_of_step:
                take_snapshot(step)
            if step % UNIFORM_BLOCK == 0:
                for row, rng in enumerate(jump_rngs):
                    uniforms[row] = rng.random(UNIFORM_BLOCK)

            evolved = psi @ propagator_t
            survival = np.sum(np.abs(evolved) ** 2, axis=1)
            jumped = uniforms[:, step % UNIFORM_BLOCK] < 1.0 - survival
            following = evolved / np.sqrt(np.where(survival > 0.0, survival, 1.0))[:, None]

            for row in np.nonzero(jumped)[0]:
                pre_jump = PureState(psi[row])
                try:
                    direction, post_jump = self._emit(pre_jump, plan.params, direction_rngs[row])
                except ZeroRateError:
                    # the pre-step state cannot emit; the draw only reflects rounding in U
                    logger.debug(f"trajectory {indices[row]}: skipped jump from a dark state")
                    continue
                jump_time = (step + 1) * plan.dt
                following[row] = post_jump.amplitudes
                jump_counts[row] += 1
                if step >= plan.window_start_step:
                    window_jump_counts[row] += 1
                    t_bin = min(int(direction.theta / math.pi * theta_bins), theta_bins - 1)
                    p_bin = min(int(direction.phi / (2.0 * math.pi) * phi_bins), phi_bins - 1)
                    histogram[t_bin, p_bin] += 1
                interval = np.searchsorted(plan.snapshot_steps, step + 1) - 1
                interval_jumps[min(max(interval, 0), len(interval_jumps) - 1)] += 1
                if plan.keep_records:
                    records[row].jumps.append(
                        JumpEvent(jump_time, direction, hash_state(psi[row]), post_jump)
                    )
            psi = following

        if plan.n_steps in slot_of_step:
            take_snapshot(plan.n_steps)
        for row, record in enumerate(records):
            record.final_state = PureState(psi[row] / np.linalg.norm(psi[row]))

        return _BatchResult(
            density_sum=density_sum,
            density_sq_re=density_sq_re,
            density_sq_im=density_sq_im,
            interval_jumps=interval_jumps,
            histogram=histogram,
            jump_counts=jump_counts,
            window_jump_counts=window_jump_counts,
            records=records if plan.keep_records else [],
        )

    def run_trajectory(
        self,
        params: PhysicalParams,
        initial: PureState,
        t_final: float,
        dt: float,
        seed: int,
        index: int = 0,
        n_snapshots: int = None,
    ) -> TrajectoryRecord:
        """One trajectory, deterministic in (seed, index)"""
        plan = self._plan(
            params,
            initial,
            t_final,
            dt,
            seed,
            n_snapshots or settings.DEFAULT_SNAPSHOT_POINTS,
            settings.histogram_bins,
            0.0,
            keep_records=True,
            record_snapshots=True,
        )
        return self._simulate_batch(plan, [index]).records[0]

    def run_ensemble(
        self,
        params: PhysicalParams,
        initial: PureState,
        t_final: float,
        dt: float,
        N: int,
        base_seed: int,
        n_snapshots: int = None,
        histogram_bins: Tuple[int, int] = None,
        window_start: float = 0.0,
        keep_records: bool = False,
    ) -> EnsembleStats:
        """N independent trajectories with seeds (base_seed, i), i = 0..N-1"""
        if N < 1:
            raise ValueError(f"N must be at least 1, got {N}")
        plan = self._plan(
            params,
            initial,
            t_final,
            dt,
            base_seed,
            n_snapshots or settings.DEFAULT_SNAPSHOT_POINTS,
            histogram_bins or settings.histogram_bins,
            window_start,
            keep_records=keep_records,
            record_snapshots=False,
        )
        batches = [
            list(range(start, min(start + self.batch_size, N)))
            for start in range(0, N, self.batch_size)
        ]

        started = time.perf_counter()
        logger.info(
            f"running {N} trajectories to t={t_final:g} (dt={dt:g}) in {len(batches)} batches "
            f"on {min(self.max_workers, len(batches))} workers"
        )
        if self.max_workers > 1 and len(batches) > 1:
            with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
                results = list(pool.map(lambda b: self._simulate_batch(plan, b), batches))
        else:
            results = [self._simulate_batch(plan, b) for b in batches]
        total = _tree_reduce(results)
        logger.info(f"ensemble finished in {time.perf_counter() - started:.2f}s")

        times = np.array(plan.snapshot_steps) * plan.dt
        mean = total.density_sum / N
        if N > 1:
            var_re = (total.density_sq_re / N - mean.real ** 2) * N / (N - 1)
            var_im = (total.density_sq_im / N - mean.imag ** 2) * N / (N - 1)
            stderr = (
                np.sqrt(np.clip(var_re, 0.0, None) / N)
                + 1j * np.sqrt(np.clip(var_im, 0.0, None) / N)
            )
        else:
            stderr = np.zeros_like(mean)
        widths = np.diff(times) if len(times) > 1 else np.array([max(t_final, 1.0)])
        rate = total.interval_jumps / (N * np.where(widths > 0, widths, 1.0))

        theta_bins, phi_bins = plan.histogram_bins
        return EnsembleStats(
            times=times,
            mean_density=mean,
            density_stderr=stderr,
            emission_rate_total=rate,
            direction_histogram=total.histogram,
            theta_edges=np.linspace(0.0, math.pi, theta_bins + 1),
            phi_edges=np.linspace(0.0, 2.0 * math.pi, phi_bins + 1),
            count_N=N,
            jump_counts=total.jump_counts,
            window_jump_counts=total.window_jump_counts,
            window=(plan.window_start_step * plan.dt, plan.n_steps * plan.dt),
            records=total.records,
        )


trajectory_service = TrajectoryService()
