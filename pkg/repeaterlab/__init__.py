import logging

import click

from repeaterlab.commands.analysis_commands import ANALYSIS_COMMANDS
from repeaterlab.config import Config


def create_cli():
    # Create the command group
    cli = click.Group(
        "repeaterlab",
        help="Fidelity and rate analysis for encoded hybrid quantum repeaters.",
    )

    logging.basicConfig(
        level=Config.LOG_LEVEL,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s"
    )
    logger = logging.getLogger(__name__)
    logger.info("Initializing repeaterlab CLI...")

    # rate-sweep, fidelity, operating-point, oracle-verify, qubus-check, montecarlo
    for command in ANALYSIS_COMMANDS:
        cli.add_command(command)

    return cli
