"""
Quantum-jump trajectories as JSON lines
"""
import argparse

from app.services.emission_service import total_emission_rate
from app.services.master_service import build_liouvillian, steady_state_numeric
from app.services.trajectory_service import trajectory_service
from app.utils.output import write_jsonl
from app.utils.validation import RunConfig

NAME = "trajectory"
HELP = "simulate trajectories and record every emission"
DEFAULT_TRAJECTORIES = 100


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-N", "--n-trajectories", type=int, help="number of trajectories")
    parser.add_argument("--dt", type=float, help="time step in units of 1/A")
    parser.add_argument("--t-final", type=float, help="simulated time in units of 1/A")
    parser.add_argument("--initial", dest="initial_state", help="initial state: 11, 12, 21, 22, g, s, a or e")
    parser.add_argument("--window-start", type=float, help="start of the rate-averaging window")


def run(config: RunConfig) -> int:
    params = config.physical_params()
    stats = trajectory_service.run_ensemble(
        params,
        config.initial(),
        config.t_final,
        config.dt,
        config.trajectories(DEFAULT_TRAJECTORIES),
        config.seed,
        window_start=config.window_start,
        keep_records=True,
    )
    rate, stderr = stats.mean_jump_rate()
    steady = steady_state_numeric(build_liouvillian(params))
    summary = {
        "n_trajectories": stats.count_N,
        "window": list(stats.window),
        "mean_jump_rate": rate,
        "mean_jump_rate_stderr": stderr,
        "steady_state_emission_rate": total_emission_rate(steady, params),
        "total_jumps": int(stats.jump_counts.sum()),
    }
    write_jsonl(
        config.output,
        config.metadata(NAME),
        (record.to_json() for record in stats.records),
        summary,
    )
    return 0
