import logging
import time

from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import click

from spbtrack.commands.common import (
    companion,
    config_options,
    handle_errors,
    load_config,
    sequence_files,
    write_manifest,
)
from spbtrack.helpers import StageTimer
from spbtrack.io.ego import read_ego_poses
from spbtrack.io.features import attach_features, read_feature_sidecar
from spbtrack.io.kitti import read_kitti_detections, write_tracks
from spbtrack.lifecycle import Tracker
from spbtrack.models.config import TrackerConfig

logger = logging.getLogger(__name__)


class SequenceJob(NamedTuple):
    name: str
    detections: Path
    features: Optional[Path]
    ego_poses: Optional[Path]
    out: Path
    config: TrackerConfig


class SequenceRun(NamedTuple):
    name: str
    frames: int
    outputs: int
    seconds: float
    timing_ms: Dict[str, float]
    confidence_normalized: bool


def track_sequence(job: SequenceJob) -> SequenceRun:
    """Track one detection file end to end and write its results."""
    timer = StageTimer()
    start = time.perf_counter()
    with timer.stage("io"):
        ego = read_ego_poses(job.ego_poses) if job.ego_poses else None
        sequence = read_kitti_detections(
            job.detections, job.config.run.frame_rate, ego
        )
        if job.features is not None:
            sequence = attach_features(
                sequence, read_feature_sidecar(job.features)
            )

    tracker = Tracker(job.config)
    tracker.timer = timer
    outputs = tracker.run(sequence.frames)

    with timer.stage("io"):
        write_tracks(job.out, outputs)
    return SequenceRun(
        name=job.name,
        frames=len(sequence),
        outputs=len(outputs),
        seconds=time.perf_counter() - start,
        timing_ms=timer.as_dict(),
        confidence_normalized=sequence.confidence_normalized,
    )


def run_jobs(
    jobs: Sequence[SequenceJob], workers: int
) -> List[SequenceRun]:
    """Run sequences, in a process pool when more than one worker."""
    if workers <= 1 or len(jobs) <= 1:
        return [track_sequence(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(track_sequence, jobs))


def _jobs(
    detections: Path,
    features: Optional[Path],
    ego_poses: Optional[Path],
    out: Path,
    config: TrackerConfig,
    split: str,
) -> List[SequenceJob]:
    if detections.is_file():
        return [
            SequenceJob(
                detections.stem, detections, features, ego_poses, out, config
            )
        ]
    return [
        SequenceJob(
            name,
            path,
            companion(features, name, ".csv"),
            companion(ego_poses, name, ".txt"),
            out / f"{name}.txt",
            config,
        )
        for name, path in sequence_files(detections, split=split)
    ]


def _totals(runs: Sequence[SequenceRun]) -> Tuple[int, float, Dict]:
    frames = sum(r.frames for r in runs)
    seconds = sum(r.seconds for r in runs)
    timing: Dict[str, float] = {}
    for run in runs:
        for stage, ms in run.timing_ms.items():
            timing[stage] = round(timing.get(stage, 0.0) + ms, 3)
    return frames, seconds, timing


@click.command("track")
@click.option(
    "--detections",
    required=True,
    type=click.Path(exists=True, path_type=Path),
    help="KITTI detection file, or a directory of NNNN.txt files.",
)
@click.option(
    "--ego-poses",
    type=click.Path(exists=True, path_type=Path),
    help="Ego pose file (or directory), 'frame x y z' per line.",
)
@click.option(
    "--features",
    type=click.Path(exists=True, path_type=Path),
    help="Feature sidecar (or directory of NNNN.csv sidecars).",
)
@config_options
@click.option(
    "--out",
    required=True,
    type=click.Path(path_type=Path),
    help="Result file, or directory when --detections is a directory.",
)
@click.option(
    "--split",
    type=click.Choice(["all", "val"]),
    default="all",
    show_default=True,
    help="Restrict a directory run to the KITTI validation sequences.",
)
@handle_errors
def track(
    detections: Path,
    ego_poses: Optional[Path],
    features: Optional[Path],
    config_path: Optional[Path],
    overrides: Tuple[str, ...],
    out: Path,
    split: str,
) -> None:
    """Run the tracker over detections and write KITTI-format results."""
    config = load_config(config_path, overrides)
    jobs = _jobs(detections, features, ego_poses, out, config, split)
    runs = run_jobs(jobs, config.run.workers)

    frames, seconds, timing = _totals(runs)
    fps = frames / seconds if seconds > 0 else 0.0
    notes = [
        f"{r.name}: confidences min-max normalised"
        for r in runs
        if r.confidence_normalized
    ]
    write_manifest(
        out,
        "track",
        config=config.flat(),
        inputs={
            "detections": str(detections),
            "features": str(features or ""),
            "ego_poses": str(ego_poses or ""),
        },
        outputs=[str(job.out) for job in jobs],
        seed=config.run.seed,
        frames=frames,
        frames_per_second=fps,
        timing_ms=timing,
        notes=notes,
    )
    for run in runs:
        logger.info(
            "%s: %d frames, %d outputs", run.name, run.frames, run.outputs
        )
    stages = ", ".join(f"{k} {v:.1f} ms" for k, v in sorted(timing.items()))
    click.echo(
        f"tracked {len(runs)} sequence(s), {frames} frames at "
        f"{fps:.1f} frames/s ({stages})"
    )
