from pathlib import Path
from typing import List, Optional, Tuple

import click

from spbtrack.commands.common import (
    handle_errors,
    sequence_files,
    write_manifest,
)
from spbtrack.constants import DEFAULT_IOU_THRESHOLD
from spbtrack.exceptions import EmptyInputError
from spbtrack.io.kitti import read_kitti_detections, read_kitti_tracks
from spbtrack.lifecycle import compute_f1_threshold
from spbtrack.metrics import label_detections


@click.command("calibrate")
@click.option(
    "--detections",
    required=True,
    type=click.Path(exists=True, path_type=Path),
    help="Labelled-split detection file or directory.",
)
@click.option(
    "--gt",
    required=True,
    type=click.Path(exists=True, path_type=Path),
    help="Ground truth for the same sequences.",
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
    help="Write the threshold as a config fragment.",
)
@handle_errors
def calibrate(
    detections: Path, gt: Path, iou_thres: float, out: Optional[Path]
) -> None:
    """Find the detection confidence that maximises F1."""
    if detections.is_file():
        pairs = [(detections, gt)]
    else:
        gt_files = dict(sequence_files(gt))
        pairs = [
            (path, gt_files[name])
            for name, path in sequence_files(detections)
            if name in gt_files
        ]
    if not pairs:
        raise EmptyInputError("no detection file has matching ground truth")

    labeled: List[Tuple[float, bool]] = []
    num_gt = 0
    for det_path, gt_path in pairs:
        seq_labels, seq_gt = label_detections(
            read_kitti_tracks(gt_path),
            read_kitti_detections(det_path),
            iou_thres,
        )
        labeled.extend(seq_labels)
        num_gt += seq_gt
    threshold = compute_f1_threshold(labeled, num_gt)

    line = f"f1_threshold = {threshold:.2f}"
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(line + "\n")
        write_manifest(
            out,
            "calibrate",
            config={"iou_threshold": iou_thres},
            inputs={"detections": str(detections), "gt": str(gt)},
            outputs=[str(out)],
            notes=[f"{len(labeled)} detections, {num_gt} ground truth"],
        )
    click.echo(line)
