from pathlib import Path
from typing import Optional

import click

from spbtrack.commands.common import handle_errors, write_manifest
from spbtrack.simgen import generate, read_scenario_spec, write_scenario


@click.command("generate")
@click.option(
    "--spec",
    "spec_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Scenario file (key = value).",
)
@click.option(
    "--out-dir",
    required=True,
    type=click.Path(file_okay=False, path_type=Path),
)
@click.option("--seed", type=int, help="Override the scenario seed.")
@handle_errors
def generate_command(
    spec_path: Path, out_dir: Path, seed: Optional[int]
) -> None:
    """Write a synthetic scenario: gt.txt, det.txt and features.csv."""
    spec = read_scenario_spec(spec_path)
    if seed is not None:
        spec = spec.copy(update={"seed": seed})
    paths = write_scenario(generate(spec), out_dir)
    write_manifest(
        out_dir,
        "generate",
        config=spec.dict(),
        inputs={"spec": str(spec_path)},
        outputs=[str(p) for p in paths.values()],
        seed=spec.seed,
        frames=spec.n_frames,
    )
    for kind, path in paths.items():
        click.echo(f"{kind}: {path}")
