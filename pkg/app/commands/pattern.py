"""
Angular emission pattern of the steady state
"""
import argparse

import numpy as np

from app.services.master_service import build_liouvillian, steady_state_numeric
from app.services.observables_service import AngularGrid, closed_form_pattern, interference_pattern
from app.utils.output import write_csv
from app.utils.validation import RunConfig

NAME = "pattern"
HELP = "steady-state emission rate density on a (theta, phi) grid"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-theta", type=int, help="polar grid points, poles included")
    parser.add_argument("--n-phi", type=int, help="azimuthal grid points on [0, 2pi)")
    parser.add_argument(
        "--closed-form",
        action="store_const",
        const=True,
        default=None,
        help="add the independent-atom closed form as a fourth column",
    )


def run(config: RunConfig) -> int:
    params = config.physical_params()
    rho = steady_state_numeric(build_liouvillian(params))
    grid = interference_pattern(rho, params, AngularGrid.sphere(config.n_theta, config.n_phi))

    header = ["theta", "phi", "intensity"]
    rows = list(grid.rows())
    if config.closed_form:
        theta, phi = np.meshgrid(grid.theta_points, grid.phi_points, indexing="ij")
        oracle = closed_form_pattern(params, theta, phi).ravel()
        header.append("closed_form")
        rows = [row + (float(value),) for row, value in zip(rows, oracle)]

    write_csv(config.output, config.metadata(NAME), header, rows)
    return 0
