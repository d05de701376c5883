import math

from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pytest

from click.testing import CliRunner
from faker import Faker

from spbtrack.main import cli
from spbtrack.models.box import Box3D
from spbtrack.models.detection import (
    Detection3D,
    EgoPose,
    FrameInput,
    TrackedObject,
)


@pytest.fixture()
def faker_seed() -> int:
    return 20221017


@pytest.fixture()
def runner() -> CliRunner:
    return CliRunner(mix_stderr=False)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(7)


def make_box(fake: Faker = Faker(), **overrides: float) -> Box3D:
    """Pedestrian-sized box at a random pose."""
    values = dict(
        x=fake.pyfloat(min_value=-20, max_value=20),
        y=fake.pyfloat(min_value=-20, max_value=20),
        z=fake.pyfloat(min_value=0.5, max_value=1.2),
        theta=fake.pyfloat(min_value=-math.pi, max_value=math.pi),
        w=fake.pyfloat(min_value=0.4, max_value=0.9),
        l=fake.pyfloat(min_value=0.4, max_value=1.2),
        h=fake.pyfloat(min_value=1.4, max_value=2.0),
    )
    values.update(overrides)
    return Box3D(**values)


def make_boxes(count: int = 10, fake: Faker = Faker()) -> List[Box3D]:
    return [make_box(fake) for _ in range(count)]


def pedestrian(x: float, y: float, theta: float = 0.0) -> Box3D:
    return Box3D(x=x, y=y, z=0.875, theta=theta, w=0.6, l=0.6, h=1.75)


def make_detection(
    box: Box3D,
    confidence: float = 0.9,
    frame: int = 0,
    feature: Optional[np.ndarray] = None,
) -> Detection3D:
    return Detection3D(
        frame=frame, box=box, confidence=confidence, feature=feature
    )


def make_frames(
    per_frame: Sequence[Sequence[Detection3D]],
    frame_rate: float = 10.0,
    ego: Optional[EgoPose] = None,
) -> List[FrameInput]:
    return [
        FrameInput(
            frame=i,
            timestamp=i / frame_rate,
            detections=list(detections),
            ego=ego or EgoPose(),
        )
        for i, detections in enumerate(per_frame)
    ]


def make_track(
    frame: int,
    track_id: int,
    box: Box3D,
    score: Optional[float] = 1.0,
) -> TrackedObject:
    return TrackedObject(frame=frame, track_id=track_id, box=box, score=score)


def crossing_tracks(
    frames: int = 20, agents: int = 3, score: float = 1.0
) -> List[TrackedObject]:
    """Well separated pedestrians walking in parallel lanes."""
    return [
        make_track(f, agent + 1, pedestrian(0.1 * f, 3.0 * agent), score)
        for f in range(frames)
        for agent in range(agents)
    ]


def write_text(path: Path, lines: Sequence[str]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{line}\n" for line in lines))
    return path


CLEAN_SCENARIO = [
    "n_pedestrians = 2",
    "duration = 2.0",
    "area = 40.0",
    "speed_range = 0.5, 1.0",
    "pos_sigma = 0.0",
    "yaw_sigma = 0.0",
    "dim_sigma = 0.0",
    "tp_conf_beta = 50, 1",
    "seed = 5",
]
# Promote on the first hit so the very first frame is reported too.
EAGER = ["--set", "candidate_promote_hits=1"]


@pytest.fixture()
def scenario_file(tmp_path: Path) -> Path:
    return write_text(tmp_path / "scenario.conf", CLEAN_SCENARIO)


@pytest.fixture()
def scenario_dir(
    runner: CliRunner, scenario_file: Path, tmp_path: Path
) -> Path:
    out_dir = tmp_path / "scenario"
    args = ["--spec", str(scenario_file), "--out-dir", str(out_dir)]
    result = runner.invoke(cli, ["generate", *args])
    assert result.exit_code == 0, result.stderr
    return out_dir
