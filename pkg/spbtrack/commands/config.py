from pathlib import Path
from typing import Optional, Tuple

import click

from spbtrack.commands.common import config_options, handle_errors, load_config
from spbtrack.io.config import format_config


@click.command("config")
@config_options
@handle_errors
def show_config(
    config_path: Optional[Path], overrides: Tuple[str, ...]
) -> None:
    """Print the effective configuration in config-file form."""
    click.echo(format_config(load_config(config_path, overrides)), nl=False)
