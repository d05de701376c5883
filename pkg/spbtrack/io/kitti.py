"""KITTI tracking label / result files.

Rows are whitespace separated::

    frame [id] type trunc occl alpha x1 y1 x2 y2 h w l x y z ry [score]

Detection files carry no id column. KITTI locations are bottom-centre;
the tracker works with the geometric centre in a z-up frame whose ground
plane is spanned by the KITTI ``x`` and ``z`` axes. On read
``Box3D.x = x``, ``Box3D.y = z`` and ``Box3D.z = y + h / 2`` (the label
height is lifted by half the box height). Writing inverts the mapping.
"""
import logging
import math

from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from spbtrack.constants import (
    KITTI_CLASSES,
    MAX_FRAME_INDEX,
    PEDESTRIAN_CLASSES,
)
from spbtrack.exceptions import ParseError
from spbtrack.io.text import read_text
from spbtrack.models.box import Box3D
from spbtrack.models.detection import (
    Detection3D,
    DetectionSequence,
    EgoPose,
    FrameInput,
    TrackedObject,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# frame type trunc occ alpha bbox(4) h w l x y z ry
_BASE_FIELDS = 16
_IGNORED_COLUMNS = "-1 -1 -10 -1 -1 -1 -1"


def box_from_kitti(values: List[float]) -> Box3D:
    """Box from the seven ``h w l x y z ry`` values of a KITTI row."""
    h, w, l, x, y, z, ry = values  # noqa: E741
    return Box3D(x=x, y=z, z=y + h / 2.0, theta=ry, w=w, l=l, h=h)


def box_to_kitti(box: Box3D) -> List[float]:
    return [
        box.h,
        box.w,
        box.l,
        box.x,
        box.z - box.h / 2.0,
        box.y,
        box.theta,
    ]


def _parse_row(
    line: str, path: PathLike, line_no: int, with_id: bool
) -> Optional[Tuple[int, int, str, Box3D, Optional[float]]]:
    fields = line.split()
    expected = _BASE_FIELDS + (1 if with_id else 0)
    if len(fields) not in (expected, expected + 1):
        raise ParseError(
            f"expected {expected} or {expected + 1} fields, "
            f"got {len(fields)}",
            path,
            line_no,
        )
    offset = 1 if with_id else 0
    label = fields[1 + offset]
    if label.lower() not in PEDESTRIAN_CLASSES:
        if label.lower() not in KITTI_CLASSES:
            logger.debug("%s:%d: unknown class %r", path, line_no, label)
        return None
    try:
        frame = int(fields[0])
        track_id = int(fields[1]) if with_id else -1
        numbers = [float(v) for v in fields[5 + offset : expected]]
        score = float(fields[expected]) if len(fields) > expected else None
    except ValueError as exc:
        raise ParseError(f"malformed numeric field ({exc})", path, line_no)
    if frame < 0:
        raise ParseError("negative frame index", path, line_no)
    if frame > MAX_FRAME_INDEX:
        raise ParseError(
            f"frame index {frame} exceeds {MAX_FRAME_INDEX}", path, line_no
        )
    if not all(math.isfinite(v) for v in numbers[-7:]):
        raise ParseError("non-finite box value", path, line_no)
    if score is not None and not math.isfinite(score):
        raise ParseError("non-finite score", path, line_no)
    try:
        box = box_from_kitti(numbers[-7:])
    except ValueError as exc:
        raise ParseError(f"invalid box ({exc})", path, line_no)
    return frame, track_id, label, box, score


def _rows(
    path: PathLike, with_id: bool
) -> Tuple[List[Tuple[int, int, str, Box3D, Optional[float]]], int]:
    rows = []
    skipped = 0
    text = read_text(path)
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        row = _parse_row(line, path, line_no, with_id)
        if row is None:
            skipped += 1
            continue
        rows.append(row)
    if skipped:
        logger.warning("%s: skipped %d non-pedestrian rows", path, skipped)
    return rows, skipped


def normalize_confidences(
    confidences: np.ndarray,
) -> Tuple[np.ndarray, bool]:
    """Min-max squash into [0, 1] when any value falls outside it."""
    if confidences.size == 0:
        return confidences, False
    low, high = float(confidences.min()), float(confidences.max())
    if low >= 0.0 and high <= 1.0:
        return confidences, False
    if high == low:
        return np.full_like(confidences, 1.0), True
    return (confidences - low) / (high - low), True


def read_kitti_detections(
    path: PathLike,
    frame_rate: float = 10.0,
    ego_poses: Optional[Dict[int, EgoPose]] = None,
) -> DetectionSequence:
    """Detections grouped by frame, frames 0..max contiguous.

    Missing scores read as 1.0. Timestamps are ``frame / frame_rate``.
    Frame indices above ``MAX_FRAME_INDEX`` are rejected.
    """
    rows, skipped = _rows(path, with_id=False)
    ego_poses = ego_poses or {}
    if not rows:
        return DetectionSequence(skipped_lines=skipped)

    confidences = np.array(
        [1.0 if score is None else score for *_, score in rows]
    )
    confidences, normalized = normalize_confidences(confidences)
    if normalized:
        logger.warning(
            "%s: confidences outside [0, 1], min-max normalised", path
        )

    grouped: Dict[int, List[Detection3D]] = {}
    for (frame, _, label, box, _), confidence in zip(rows, confidences):
        grouped.setdefault(frame, []).append(
            Detection3D(
                frame=frame,
                box=box,
                confidence=float(confidence),
                class_label=label,
            )
        )
    origin = EgoPose()
    frames = [
        FrameInput.construct(
            frame=frame,
            timestamp=frame / frame_rate,
            detections=grouped.get(frame, []),
            ego=ego_poses.get(frame, origin),
        )
        for frame in range(max(grouped) + 1)
    ]
    return DetectionSequence.construct(
        frames=frames,
        confidence_normalized=normalized,
        skipped_lines=skipped,
    )


def read_kitti_tracks(path: PathLike) -> List[TrackedObject]:
    """Ground-truth labels or tracker results (rows with an id column)."""
    rows, _ = _rows(path, with_id=True)
    return [
        TrackedObject(
            frame=frame,
            track_id=track_id,
            box=box,
            score=score,
            class_label=label,
        )
        for frame, track_id, label, box, score in rows
    ]


def format_track(obj: TrackedObject) -> str:
    values = " ".join(f"{v:.6f}" for v in box_to_kitti(obj.box))
    row = f"{obj.frame} {obj.track_id} Pedestrian {_IGNORED_COLUMNS} {values}"
    if obj.score is not None:
        row += f" {obj.score:.6f}"
    return row


def write_tracks(path: PathLike, outputs: Iterable[TrackedObject]) -> None:
    ordered = sorted(outputs, key=lambda o: (o.frame, o.track_id))
    lines = [format_track(obj) + "\n" for obj in ordered]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.writelines(lines)


def write_detections(path: PathLike, sequence: DetectionSequence) -> None:
    """Detection rows (no id column) in per-frame order."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for frame in sequence.frames:
            for d in frame.detections:
                values = " ".join(f"{v:.6f}" for v in box_to_kitti(d.box))
                fh.write(
                    f"{frame.frame} Pedestrian {_IGNORED_COLUMNS} {values} "
                    f"{d.confidence:.6f}\n"
                )
