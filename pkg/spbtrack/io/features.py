"""Feature sidecar: embeddings for the detections of a KITTI detection file.

The first line holds the embedding width ``D``; every following line is a
CSV row ``frame,det_index,f_1,...,f_D``. ``det_index`` counts the
pedestrian detections of a frame in file order.
"""
import io as _io

from pathlib import Path
from typing import Dict, Mapping, Union

import numpy as np
import pandas as pd

from spbtrack.exceptions import (
    DimensionMismatchError,
    MissingDetectionError,
    ParseError,
)
from spbtrack.io.text import read_text
from spbtrack.models.detection import DetectionSequence

PathLike = Union[str, Path]
FeatureMap = Dict[int, Dict[int, np.ndarray]]


def read_feature_sidecar(path: PathLike) -> FeatureMap:
    text = read_text(path)
    header, _, body = text.partition("\n")
    try:
        dim = int(header.strip())
    except ValueError:
        raise ParseError("first line must be the feature width", path, 1)
    if dim < 1:
        raise ParseError("feature width must be positive", path, 1)
    if not body.strip():
        return {}

    try:
        table = pd.read_csv(
            _io.StringIO(body),
            header=None,
            dtype=float,
            float_precision="round_trip",
            skip_blank_lines=True,
        )
    except (pd.errors.ParserError, ValueError) as exc:
        raise ParseError(f"malformed feature rows ({exc})", path)
    if table.shape[1] != dim + 2:
        raise DimensionMismatchError(
            f"{path}: rows have {table.shape[1] - 2} values, header "
            f"declares {dim}"
        )

    values = table.to_numpy()
    features: FeatureMap = {}
    for row_no, row in enumerate(values):
        line = row_no + 2
        frame, det_index, vector = row[0], row[1], row[2:]
        if not (
            np.isfinite(frame)
            and np.isfinite(det_index)
            and frame == int(frame)
            and det_index == int(det_index)
            and frame >= 0
            and det_index >= 0
        ):
            raise ParseError(
                "frame and det_index must be integers", path, line
            )
        if not np.all(np.isfinite(vector)):
            raise ParseError("non-finite feature value", path, line)
        if not np.linalg.norm(vector) > 0.0:
            raise ParseError("zero feature vector", path, line)
        features.setdefault(int(frame), {})[int(det_index)] = vector.copy()
    return features


def write_feature_sidecar(path: PathLike, features: Mapping) -> None:
    """Write ``frame -> det_index -> vector`` rows sorted by key."""
    rows = [
        (frame, det_index, np.asarray(vector, dtype=float))
        for frame in sorted(features)
        for det_index, vector in sorted(features[frame].items())
    ]
    dims = {len(vector) for *_, vector in rows}
    if len(dims) > 1:
        raise DimensionMismatchError(
            f"feature widths differ: {sorted(dims)}"
        )
    dim = dims.pop() if dims else 0
    table = pd.DataFrame([vector for *_, vector in rows])
    table.insert(0, "det_index", [det_index for _, det_index, _ in rows])
    table.insert(0, "frame", [frame for frame, *_ in rows])
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"{dim}\n")
        if rows:
            table.to_csv(fh, header=False, index=False, float_format="%.17g")


def attach_features(
    sequence: DetectionSequence, features: FeatureMap
) -> DetectionSequence:
    """Copy of ``sequence`` with sidecar embeddings on its detections."""
    by_frame = {frame.frame: frame for frame in sequence.frames}
    dims = {v.shape[0] for rows in features.values() for v in rows.values()}
    if len(dims) > 1:
        raise DimensionMismatchError(
            f"feature widths differ: {sorted(dims)}"
        )
    for frame, rows in features.items():
        detections = (
            by_frame[frame].detections if frame in by_frame else []
        )
        for det_index in rows:
            if det_index >= len(detections):
                raise MissingDetectionError(
                    f"feature for frame {frame} detection {det_index} has "
                    "no matching detection"
                )

    frames = []
    for frame in sequence.frames:
        rows = features.get(frame.frame, {})
        detections = [
            d.copy(update={"feature": rows[i]}) if i in rows else d
            for i, d in enumerate(frame.detections)
        ]
        frames.append(frame.copy(update={"detections": detections}))
    return sequence.copy(update={"frames": frames})
