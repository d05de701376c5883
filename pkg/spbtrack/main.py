import logging

import better_exceptions
import click

from spbtrack import __version__
from spbtrack.commands.ablate import ablate
from spbtrack.commands.calibrate import calibrate
from spbtrack.commands.config import show_config
from spbtrack.commands.evaluate import evaluate_command
from spbtrack.commands.generate import generate_command
from spbtrack.commands.track import track
from spbtrack.settings import settings

better_exceptions.MAX_LENGTH = None

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]


@click.group()
@click.version_option(__version__, prog_name=settings.PROJECT_NAME)
@click.option(
    "--log-level",
    type=click.Choice(LOG_LEVELS, case_sensitive=False),
    default=settings.SPBTRACK_LOG_LEVEL,
    show_default=True,
)
@click.option(
    "--debug",
    is_flag=True,
    help="Show full tracebacks instead of one-line errors.",
)
@click.pass_context
def cli(ctx: click.Context, log_level: str, debug: bool) -> None:
    """3D person tracking from LiDAR detections."""
    logging.basicConfig(
        level=log_level.upper(), format=LOG_FORMAT, force=True
    )
    if debug:
        better_exceptions.hook()
    ctx.obj = {"debug": debug}


cli.add_command(track)
cli.add_command(evaluate_command)
cli.add_command(ablate)
cli.add_command(generate_command)
cli.add_command(calibrate)
cli.add_command(show_config)


if __name__ == "__main__":  # pragma: no cover
    cli()
