"""Ego pose files: one ``frame x y z`` row per line, whitespace separated."""
import math

from pathlib import Path
from typing import Dict, Union

from spbtrack.exceptions import ParseError
from spbtrack.io.text import read_text
from spbtrack.models.detection import EgoPose

PathLike = Union[str, Path]


def read_ego_poses(path: PathLike) -> Dict[int, EgoPose]:
    """Frames absent from the file keep the origin as their ego pose."""
    poses: Dict[int, EgoPose] = {}
    text = read_text(path)
    for line_no, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if not fields or fields[0].startswith("#"):
            continue
        if len(fields) != 4:
            raise ParseError(
                f"expected 4 fields, got {len(fields)}", path, line_no
            )
        try:
            frame = int(fields[0])
            x, y, z = (float(v) for v in fields[1:])
        except ValueError as exc:
            raise ParseError(f"malformed numeric field ({exc})", path, line_no)
        if frame < 0 or not all(math.isfinite(v) for v in (x, y, z)):
            raise ParseError("invalid ego pose", path, line_no)
        if frame in poses:
            raise ParseError(f"duplicate frame {frame}", path, line_no)
        poses[frame] = EgoPose(x_ego=x, y_ego=y, z_ego=z)
    return poses
