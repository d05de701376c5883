from pathlib import Path
from typing import Dict, Optional

import click

from spbtrack.commands.common import (
    handle_errors,
    sequence_files,
    write_manifest,
)
from spbtrack.constants import DEFAULT_IOU_THRESHOLD
from spbtrack.exceptions import EmptyInputError
from spbtrack.io.kitti import read_kitti_tracks
from spbtrack.metrics import SequencePair, evaluate


def load_pairs(gt: Path, results: Path) -> Dict[str, SequencePair]:
    """Ground truth and results paired by sequence name."""
    if gt.is_file() and results.is_file():
        return {
            results.stem: (read_kitti_tracks(gt), read_kitti_tracks(results))
        }
    gt_files = dict(sequence_files(gt))
    pairs: Dict[str, SequencePair] = {}
    for name, path in sequence_files(results):
        if name not in gt_files:
            raise EmptyInputError(
                f"no ground truth for result sequence {name} in {gt}"
            )
        pairs[name] = (
            read_kitti_tracks(gt_files[name]),
            read_kitti_tracks(path),
        )
    return pairs


@click.command("eval")
@click.option(
    "--gt",
    required=True,
    type=click.Path(exists=True, path_type=Path),
    help="Ground-truth label file or directory.",
)
@click.option(
    "--results",
    required=True,
    type=click.Path(exists=True, path_type=Path),
    help="Tracker result file or directory.",
)
@click.option(
    "--iou-thres",
    type=click.FloatRange(0.0, 1.0, min_open=True),
    default=DEFAULT_IOU_THRESHOLD,
    show_default=True,
)
@click.option(
    "--out",
    type=click.Path(dir_okay=False, path_type=Path),
    help="CSV report (default: eval.csv next to the results).",
)
@handle_errors
def evaluate_command(
    gt: Path, results: Path, iou_thres: float, out: Optional[Path]
) -> None:
    """Score tracker results against ground truth."""
    report = evaluate(load_pairs(gt, results), iou_thres)
    if out is None:
        base = results.parent if results.is_file() else results
        out = base / "eval.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    report.to_csv(out)
    write_manifest(
        out,
        "eval",
        config={"iou_threshold": iou_thres},
        inputs={"gt": str(gt), "results": str(results)},
        outputs=[str(out)],
    )
    click.echo(report.table())
