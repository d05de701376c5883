"""Options and plumbing shared by the subcommands."""
import functools
import logging

from pathlib import Path
from typing import Any, Callable, List, Optional, Sequence, Tuple, TypeVar

import click

from spbtrack import __version__
from spbtrack.constants import KITTI_VAL_SEQUENCES
from spbtrack.exceptions import EmptyInputError, SpbTrackError
from spbtrack.io.config import read_config
from spbtrack.models.config import TrackerConfig
from spbtrack.models.report import RunManifest
from spbtrack.settings import settings

logger = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable[..., Any])

MANIFEST_SUFFIX = ".manifest.json"


class CommandError(click.ClickException):
    """Click-rendered form of a :class:`SpbTrackError`."""

    def __init__(self, error: SpbTrackError) -> None:
        super().__init__(error.detail)
        self.exit_code = error.exit_code


def handle_errors(command: F) -> F:
    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return command(*args, **kwargs)
        except SpbTrackError as exc:
            ctx = click.get_current_context(silent=True)
            if ctx is not None and (ctx.obj or {}).get("debug"):
                raise
            raise CommandError(exc) from exc

    return wrapper  # type: ignore[return-value]


def config_options(command: F) -> F:
    command = click.option(
        "--set",
        "overrides",
        multiple=True,
        metavar="KEY=VALUE",
        help="Override one configuration key; applied after --config.",
    )(command)
    command = click.option(
        "--config",
        "config_path",
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        help="Configuration file (default: $SPBTRACK_CONFIG).",
    )(command)
    return command


def load_config(
    config_path: Optional[Path], overrides: Sequence[str]
) -> TrackerConfig:
    path = config_path or settings.SPBTRACK_CONFIG
    return read_config(path, overrides)


def sequence_files(
    path: Path, suffix: str = ".txt", split: str = "all"
) -> List[Tuple[str, Path]]:
    """(sequence name, file) pairs for a file or a directory of files."""
    if path.is_file():
        return [(path.stem, path)]
    files = sorted(p for p in path.glob(f"*{suffix}") if p.is_file())
    if split == "val":
        files = [
            p
            for p in files
            if p.stem.isdigit() and int(p.stem) in KITTI_VAL_SEQUENCES
        ]
    if not files:
        raise EmptyInputError(f"no {suffix} sequence files in {path}")
    return [(p.stem, p) for p in files]


def companion(
    directory: Optional[Path], name: str, suffix: str
) -> Optional[Path]:
    """``directory/name+suffix`` when ``directory`` is given and has it."""
    if directory is None:
        return None
    if directory.is_file():
        return directory
    candidate = directory / f"{name}{suffix}"
    return candidate if candidate.is_file() else None


def manifest_path(out: Path) -> Path:
    if out.suffix:
        return out.with_name(out.stem + MANIFEST_SUFFIX)
    return out / ("run" + MANIFEST_SUFFIX)


def write_manifest(out: Path, command: str, **fields: Any) -> Path:
    manifest = RunManifest(command=command, version=__version__, **fields)
    path = manifest_path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(manifest.json(indent=2) + "\n")
    logger.debug("wrote manifest %s", path)
    return path
