import argparse
import json
import sys
from typing import List, Optional

from pydantic import ValidationError

from app.commands import COMMANDS
from app.config import settings
from app.utils.errors import ConfigError, QJumpError
from app.utils.logger import logger
from app.utils.validation import RunConfig, build_run_config

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _common_arguments() -> argparse.ArgumentParser:
    """Flags shared by every subcommand; unset flags leave preset and file values alone"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", help="named parameter set, e.g. fig3, fig4, fig5")
    common.add_argument("--config", dest="config_file", help="JSON run manifest")
    common.add_argument("-o", "--output", help="output file (default: stdout)")
    common.add_argument("--omega", dest="omega_over_A", type=float, help="Rabi frequency of atom 1 in units of A")
    common.add_argument(
        "--omega2", dest="omega_2_over_A", type=float, help="Rabi frequency of atom 2 (default: same as atom 1)"
    )
    common.add_argument("--r", dest="r_over_lambda0", type=float, help="atom separation in wavelengths")
    common.add_argument(
        "--dipole", dest="dipole_axis", type=float, nargs=3, metavar=("X", "Y", "Z"), help="dipole orientation"
    )
    common.add_argument(
        "--coupling",
        dest="include_coupling",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="include the dipole-dipole coupling C",
    )
    common.add_argument("--seed", type=int, help="base seed of the trajectory streams")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.APP_NAME,
        description="Quantum-jump simulation of two dipole-interacting driven atoms",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    common = _common_arguments()
    for name, command in COMMANDS.items():
        sub = subparsers.add_parser(name, parents=[common], help=command.HELP, description=command.HELP)
        command.add_arguments(sub)
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    fields = RunConfig.model_fields
    overrides = {key: value for key, value in vars(args).items() if key in fields}
    if overrides.get("dipole_axis") is not None:
        overrides["dipole_axis"] = tuple(overrides["dipole_axis"])
    return overrides


def _report_error(exc: Exception) -> None:
    """One JSON line on stderr for scripts, after the log record"""
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    command = COMMANDS[args.command]

    try:
        config = build_run_config(args.preset, args.config_file, _overrides(args))
    except (ValidationError, ConfigError) as e:
        logger.error(f"Invalid configuration: {e}")
        _report_error(e)
        return EXIT_CONFIG

    logger.info(f"Running {args.command} (config {config.metadata(args.command)['config_hash']})")
    try:
        if args.command == "validate":
            return command.run(config, corrupt_coupling=args.corrupt_coupling)
        return command.run(config)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        _report_error(e)
        return EXIT_CONFIG
    except (QJumpError, ValueError, ArithmeticError) as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        _report_error(e)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
