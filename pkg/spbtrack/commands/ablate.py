"""Ablation runner: the cross product of swept values over seeded
synthetic scenarios, one CSV row per cell.
"""
import itertools
import logging

from concurrent.futures import ProcessPoolExecutor, as_completed
from io import StringIO
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import click
import pandas as pd

from dotenv import dotenv_values
from tqdm import tqdm

from spbtrack.commands.common import (
    config_options,
    handle_errors,
    write_manifest,
)
from spbtrack.exceptions import ConfigTypeError, UnknownKeyError
from spbtrack.io.config import key_sections, read_config
from spbtrack.io.text import read_text
from spbtrack.lifecycle import Tracker
from spbtrack.metrics import evaluate_sequence
from spbtrack.models.config import TrackerConfig
from spbtrack.models.report import REPORT_COLUMNS
from spbtrack.models.scenario import ScenarioSpec
from spbtrack.settings import settings
from spbtrack.simgen import (
    build_scenario_spec,
    decimate,
    decimate_tracks,
    generate,
)

logger = logging.getLogger(__name__)

METRIC_COLUMNS = [c for c in REPORT_COLUMNS if c != "sequence"]


class AblationJob(NamedTuple):
    index: int
    values: Dict[str, str]
    scenario: ScenarioSpec
    config: TrackerConfig
    decimate: int


def parse_sweep(item: str) -> Tuple[str, List[str]]:
    """``key:v1,v2,...`` -> (key, [v1, v2, ...])."""
    key, sep, values = item.partition(":")
    choices = [v.strip() for v in values.split(",") if v.strip()]
    if not sep or not key.strip() or not choices:
        raise ConfigTypeError(f"sweep {item!r} is not of the form key:v1,v2")
    key = key.strip()
    if key not in key_sections() and key not in ScenarioSpec.__fields__:
        raise UnknownKeyError("cannot sweep an unknown key", key=key)
    return key, choices


def run_cell(job: AblationJob) -> Dict[str, Any]:
    """Generate, track and evaluate one (cell, seed) pair."""
    scenario = generate(job.scenario)
    frames = scenario.detections.frames
    gt = scenario.gt
    if job.decimate > 1:
        frames = decimate(frames, job.decimate)
        gt = decimate_tracks(gt, job.decimate)
    outputs = Tracker(job.config).run(frames)
    metrics = evaluate_sequence(f"cell{job.index}", gt, outputs)
    row: Dict[str, Any] = dict(job.values)
    row["seed"] = job.scenario.seed
    row.update(
        {k: v for k, v in metrics.row().items() if k in METRIC_COLUMNS}
    )
    return row


def build_jobs(
    scenario_values: Dict[str, Optional[str]],
    sweeps: List[Tuple[str, List[str]]],
    config_path: Optional[Path],
    overrides: Tuple[str, ...],
    seeds: int,
    factor: int,
) -> List[AblationJob]:
    config_keys = key_sections()
    keys = [key for key, _ in sweeps]
    jobs: List[AblationJob] = []
    for combo in itertools.product(*(values for _, values in sweeps)):
        values = dict(zip(keys, combo))
        cell_overrides = list(overrides) + [
            f"{k}={v}" for k, v in values.items() if k in config_keys
        ]
        scenario_raw = dict(scenario_values)
        scenario_raw.update(
            {
                k: v
                for k, v in values.items()
                if k in ScenarioSpec.__fields__
            }
        )
        base = build_scenario_spec(scenario_raw)
        for offset in range(seeds):
            seed = base.seed + offset
            config = read_config(
                config_path, cell_overrides + [f"seed={seed}"]
            )
            jobs.append(
                AblationJob(
                    index=len(jobs),
                    values=values,
                    scenario=base.copy(update={"seed": seed}),
                    config=config,
                    decimate=factor,
                )
            )
    return jobs


def run_jobs(jobs: List[AblationJob], workers: int) -> List[Dict[str, Any]]:
    rows: List[Optional[Dict[str, Any]]] = [None] * len(jobs)
    progress = tqdm(total=len(jobs), desc="ablate", unit="run", disable=None)
    if workers <= 1:
        for job in jobs:
            rows[job.index] = run_cell(job)
            progress.update()
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(run_cell, job): job for job in jobs}
            for future in as_completed(futures):
                rows[futures[future].index] = future.result()
                progress.update()
    progress.close()
    return [row for row in rows if row is not None]


@click.command("ablate")
@click.option(
    "--scenario",
    "scenario_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Scenario file (key = value).",
)
@click.option(
    "--sweep",
    "sweep_items",
    multiple=True,
    metavar="KEY:V1,V2",
    help="Config or scenario key and the values to sweep; repeatable.",
)
@config_options
@click.option("--seeds", type=click.IntRange(min=1), default=1)
@click.option(
    "--decimate",
    "factor",
    type=click.IntRange(min=1),
    default=1,
    help="Keep every n-th frame (2 turns 10 Hz data into 5 Hz).",
)
@click.option(
    "--out",
    required=True,
    type=click.Path(dir_okay=False, path_type=Path),
    help="CSV with one row per cell (seed-averaged).",
)
@click.option(
    "--per-seed",
    is_flag=True,
    help="Also write every (cell, seed) row to <out>.per_seed.csv.",
)
@handle_errors
def ablate(
    scenario_path: Path,
    sweep_items: Tuple[str, ...],
    config_path: Optional[Path],
    overrides: Tuple[str, ...],
    seeds: int,
    factor: int,
    out: Path,
    per_seed: bool,
) -> None:
    """Sweep configuration values over synthetic scenarios."""
    sweeps = [parse_sweep(item) for item in sweep_items]
    keys = [key for key, _ in sweeps]
    config_path = config_path or settings.SPBTRACK_CONFIG
    base_config = read_config(config_path, overrides)
    jobs = build_jobs(
        dict(dotenv_values(stream=StringIO(read_text(scenario_path)))),
        sweeps,
        config_path,
        overrides,
        seeds,
        factor,
    )
    logger.info("ablation: %d runs over %d seed(s)", len(jobs), seeds)
    rows = run_jobs(jobs, base_config.run.workers)

    columns = keys + ["seed"] + METRIC_COLUMNS
    per_seed_frame = pd.DataFrame(rows, columns=columns)
    if keys:
        means = (
            per_seed_frame.drop(columns="seed")
            .groupby(keys, sort=False)
            .mean()
            .reset_index()
        )
    else:
        means = per_seed_frame.drop(columns="seed").mean().to_frame().T
    means.insert(len(keys), "seeds", seeds)

    out.parent.mkdir(parents=True, exist_ok=True)
    means.to_csv(out, index=False, float_format="%.6f")
    outputs = [str(out)]
    if per_seed:
        seed_path = out.with_name(out.stem + ".per_seed.csv")
        per_seed_frame.to_csv(seed_path, index=False, float_format="%.6f")
        outputs.append(str(seed_path))
    write_manifest(
        out,
        "ablate",
        config=base_config.flat(),
        inputs={"scenario": str(scenario_path)},
        outputs=outputs,
        seed=jobs[0].scenario.seed if jobs else 0,
        notes=[f"sweep {item}" for item in sweep_items]
        + [f"decimate {factor}"],
    )
    click.echo(means.to_string(index=False, float_format="%.4f"))
