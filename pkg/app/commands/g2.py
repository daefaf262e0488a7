"""
Zero-delay photon correlation around a fixed-theta ring
"""
import argparse

import numpy as np

from app.services.master_service import build_liouvillian, steady_state_numeric
from app.services.observables_service import (
    AngularGrid,
    bunching_map,
    closed_form_g2,
    g2_zero,
    maximal_bunching_direction,
)
from app.utils.output import write_csv
from app.utils.validation import RunConfig

NAME = "g2"
HELP = "g2(0) as a function of phi at fixed theta"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--theta", type=float, help="polar angle of the ring in radians")
    parser.add_argument("--n-phi", type=int, help="azimuthal grid points on [0, 2pi)")
    parser.add_argument(
        "--closed-form",
        action="store_const",
        const=True,
        default=None,
        help="add the independent-atom closed form as a third column",
    )


def run(config: RunConfig) -> int:
    params = config.physical_params()
    rho = steady_state_numeric(build_liouvillian(params))
    phi = np.linspace(0.0, 2.0 * np.pi, config.n_phi, endpoint=False)
    ring = bunching_map(rho, params, AngularGrid.ring(config.theta, phi))

    header = ["phi", "g2"]
    columns = [phi, ring.values[0]]
    if config.closed_form:
        header.append("closed_form")
        columns.append(closed_form_g2(params, config.theta, phi))

    metadata = config.metadata(NAME)
    peak = maximal_bunching_direction(params, config.theta)
    if peak is not None:
        metadata["maximal_bunching"] = {"phi": peak.phi, "g2": g2_zero(rho, params, peak)}

    write_csv(config.output, metadata, header, zip(*columns))
    return 0
