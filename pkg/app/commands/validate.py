"""
Run the self-consistency suite
"""
import argparse
import sys

from app.services.validation_service import ValidationService
from app.utils.output import write_json
from app.utils.validation import RunConfig

NAME = "validate"
HELP = "cross-check trajectories, master equation and closed forms"
DEFAULT_TRAJECTORIES = 10_000


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-N", "--n-trajectories", type=int, help="trajectories per statistical check")
    parser.add_argument("--dt", type=float, help="trajectory time step in units of 1/A")
    parser.add_argument("--t-final", type=float, help="end time of the trajectory-vs-master check")
    # negative control: flips the sign of C in the quadrature comparison
    parser.add_argument("--corrupt-coupling", action="store_true", help=argparse.SUPPRESS)


def run(config: RunConfig, corrupt_coupling: bool = False) -> int:
    service = ValidationService(
        n_trajectories=config.trajectories(DEFAULT_TRAJECTORIES),
        dt=config.dt,
        seed=config.seed,
        t_final=config.t_final,
        corrupt_coupling=corrupt_coupling,
    )
    report = service.run_suite()
    for check in report.checks:
        sys.stderr.write(check.summary_line() + "\n")
    metadata = config.metadata(NAME)
    metadata["corrupt_coupling"] = corrupt_coupling
    write_json(config.output, metadata, report.to_dict())
    return 0 if report.passed else 1
