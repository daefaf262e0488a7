"""
Steady state of the driven atom pair
"""
import argparse

import numpy as np

from app.models.physics import DICKE_LABELS
from app.services.dynamics_service import effective_coupling
from app.services.emission_service import total_emission_rate
from app.services.master_service import (
    analytic_populations,
    build_liouvillian,
    dicke_elements,
    dicke_populations,
    steady_state_numeric,
)
from app.utils.logger import logger
from app.utils.output import write_json
from app.utils.validation import RunConfig

NAME = "steady"
HELP = "steady-state density matrix, numeric and closed form"


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--no-analytic",
        dest="analytic",
        action="store_const",
        const=False,
        default=None,
        help="skip the closed-form populations",
    )


def run(config: RunConfig) -> int:
    params = config.physical_params()
    coupling = effective_coupling(params)
    rho = steady_state_numeric(build_liouvillian(params, coupling))
    numeric = dicke_populations(rho)

    result = {
        "coupling_C": coupling.value_C,
        "density_matrix": rho.entries,
        "dicke_matrix": dicke_elements(rho),
        "dicke_populations": numeric,
        "total_emission_rate": total_emission_rate(rho, params, coupling),
    }
    analytic_wanted = config.analytic
    if analytic_wanted and not params.equal_real_drive and "analytic" not in config.model_fields_set:
        logger.info("closed form needs equal real drives; writing the numeric steady state only")
        analytic_wanted = False
    if analytic_wanted:
        analytic = analytic_populations(params, coupling).as_dict()
        result["analytic_populations"] = analytic
        result["difference"] = {label: numeric[label] - analytic[label] for label in DICKE_LABELS}
        result["max_abs_difference"] = float(
            np.max(np.abs([result["difference"][label] for label in DICKE_LABELS]))
        )
        logger.info(f"closed form agrees to {result['max_abs_difference']:.3e}")

    write_json(config.output, config.metadata(NAME), result)
    return 0
