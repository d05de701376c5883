"""Synthetic pedestrian scenarios: ground truth, noisy detections and
per-agent embeddings, all drawn from one seeded generator.
"""
import logging
import math

from io import StringIO
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Sequence, Union

import numpy as np

from dotenv import dotenv_values
from pydantic import ValidationError

from spbtrack.constants import CONFIDENCE_FLOOR, MIN_DIMENSION, MotionModel
from spbtrack.exceptions import InvalidSpecError
from spbtrack.io.features import FeatureMap, write_feature_sidecar
from spbtrack.io.kitti import write_detections, write_tracks
from spbtrack.io.text import read_text
from spbtrack.models.box import Box3D
from spbtrack.models.detection import (
    Detection3D,
    DetectionSequence,
    FrameInput,
    TrackedObject,
)
from spbtrack.models.scenario import OcclusionEvent, ScenarioSpec

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

PEDESTRIAN_SIZE = (0.6, 0.6, 1.75)
PEDESTRIAN_SIZE_SIGMA = 0.05
WEAVE_AMPLITUDE = 0.5
WEAVE_FREQUENCY = 0.25
STOP_AND_GO_PERIOD = 4.0
STOP_AND_GO_MOVING = 2.5
TURN_RATE_SIGMA = 0.6

GT_FILE = "gt.txt"
DETECTIONS_FILE = "det.txt"
FEATURES_FILE = "features.csv"


class Scenario(NamedTuple):
    gt: List[TrackedObject]
    detections: DetectionSequence
    features: FeatureMap


class _Agent:
    """Kinematic state of one simulated pedestrian."""

    def __init__(
        self,
        index: int,
        model: MotionModel,
        spec: ScenarioSpec,
        rng: np.random.Generator,
    ) -> None:
        half = spec.area / 2.0
        self.id = index + 1
        self.model = model
        self.x, self.y = rng.uniform(-half, half, size=2)
        self.heading = rng.uniform(-math.pi, math.pi)
        self.speed = rng.uniform(*spec.speed_range)
        self.phase = rng.uniform(0.0, 2.0 * math.pi)
        size = rng.normal(PEDESTRIAN_SIZE, PEDESTRIAN_SIZE_SIGMA)
        self.w, self.l, self.h = np.maximum(size, 0.3)
        self.feature = rng.standard_normal(spec.feature_dim)
        self.feature /= np.linalg.norm(self.feature)
        self.yaw = self.heading

    def step(
        self, t: float, dt: float, half: float, rng: np.random.Generator
    ) -> None:
        # Drawn for every model so each agent consumes the stream equally.
        turn = rng.normal(0.0, TURN_RATE_SIGMA * math.sqrt(dt))
        heading, speed = self.heading, self.speed
        if self.model == MotionModel.SINUSOIDAL_WEAVE:
            heading += WEAVE_AMPLITUDE * math.sin(
                2.0 * math.pi * WEAVE_FREQUENCY * t + self.phase
            )
        elif self.model == MotionModel.STOP_AND_GO:
            offset = self.phase / (2.0 * math.pi) * STOP_AND_GO_PERIOD
            cycle = (t + offset) % STOP_AND_GO_PERIOD
            if cycle >= STOP_AND_GO_MOVING:
                speed = 0.0
        elif self.model == MotionModel.RANDOM_TURN:
            self.heading += turn
            heading = self.heading

        self.x += speed * math.cos(heading) * dt
        self.y += speed * math.sin(heading) * dt
        if abs(self.x) > half:
            self.x = math.copysign(2.0 * half - abs(self.x), self.x)
            self.heading = math.pi - self.heading
        if abs(self.y) > half:
            self.y = math.copysign(2.0 * half - abs(self.y), self.y)
            self.heading = -self.heading
        if speed > 0.0:
            self.yaw = heading

    def box(self) -> Box3D:
        return Box3D(
            x=self.x,
            y=self.y,
            z=self.h / 2.0,
            theta=self.yaw,
            w=self.w,
            l=self.l,
            h=self.h,
        )


def _occluded(events: Sequence[OcclusionEvent]) -> Dict[int, set]:
    hidden: Dict[int, set] = {}
    for event in events:
        hidden.setdefault(event.agent, set()).update(
            range(event.start, event.end + 1)
        )
    return hidden


def _noisy_box(
    box: Box3D,
    spec: ScenarioSpec,
    rng: np.random.Generator,
    scale: float = 1.0,
) -> Box3D:
    dx, dy, dz = rng.normal(0.0, scale * spec.pos_sigma, size=3)
    dyaw = rng.normal(0.0, scale * spec.yaw_sigma)
    dw, dl, dh = rng.normal(0.0, scale * spec.dim_sigma, size=3)
    return Box3D(
        x=box.x + dx,
        y=box.y + dy,
        z=box.z + dz,
        theta=box.theta + dyaw,
        w=max(box.w + dw, MIN_DIMENSION),
        l=max(box.l + dl, MIN_DIMENSION),
        h=max(box.h + dh, MIN_DIMENSION),
    )


def _noise_scale(confidence: float, spec: ScenarioSpec) -> float:
    """Standard-deviation factor for a true positive of ``confidence``."""
    if not spec.confidence_noise:
        return 1.0
    inverse = 1.0 / max(confidence, CONFIDENCE_FLOOR)
    return math.sqrt(inverse / spec.mean_inverse_confidence)


def _false_positive(
    frame: int, spec: ScenarioSpec, rng: np.random.Generator
) -> Detection3D:
    half = spec.area / 2.0
    x, y = rng.uniform(-half, half, size=2)
    w, l, h = np.maximum(  # noqa: E741
        rng.normal(PEDESTRIAN_SIZE, PEDESTRIAN_SIZE_SIGMA), 0.3
    )
    feature = rng.standard_normal(spec.feature_dim)
    return Detection3D(
        frame=frame,
        box=Box3D(
            x=x,
            y=y,
            z=h / 2.0,
            theta=rng.uniform(-math.pi, math.pi),
            w=w,
            l=l,
            h=h,
        ),
        confidence=float(rng.beta(*spec.fp_conf_beta)),
        feature=feature,
    )


def generate(spec: ScenarioSpec) -> Scenario:
    """Simulate ``spec``; identical specs give identical scenarios."""
    rng = np.random.default_rng(spec.seed)
    dt = 1.0 / spec.frame_rate
    half = spec.area / 2.0
    models = spec.motion_models
    agents = [
        _Agent(i, models[i % len(models)], spec, rng)
        for i in range(spec.n_pedestrians)
    ]
    hidden = _occluded(spec.occlusions)

    gt: List[TrackedObject] = []
    frames: List[FrameInput] = []
    features: FeatureMap = {}
    for frame in range(spec.n_frames):
        t = frame * dt
        if frame > 0:
            for agent in agents:
                agent.step(t, dt, half, rng)
        detections: List[Detection3D] = []
        for agent in agents:
            box = agent.box()
            gt.append(TrackedObject(frame=frame, track_id=agent.id, box=box))
            confidence = float(rng.beta(*spec.tp_conf_beta))
            noisy = _noisy_box(box, spec, rng, _noise_scale(confidence, spec))
            feature = agent.feature + rng.normal(
                0.0, spec.feature_noise, size=spec.feature_dim
            )
            dropped = rng.random() < spec.dropout_rate
            if frame in hidden.get(agent.id, ()) or dropped:
                continue
            detections.append(
                Detection3D(
                    frame=frame,
                    box=noisy,
                    confidence=confidence,
                    feature=feature,
                )
            )
        for _ in range(rng.poisson(spec.fp_rate)):
            detections.append(_false_positive(frame, spec, rng))

        features[frame] = {
            i: d.feature
            for i, d in enumerate(detections)
            if d.feature is not None
        }
        frames.append(
            FrameInput(frame=frame, timestamp=t, detections=detections)
        )

    logger.debug(
        "generated %d frames, %d agents, seed %d",
        spec.n_frames,
        spec.n_pedestrians,
        spec.seed,
    )
    return Scenario(gt, DetectionSequence(frames=frames), features)


def decimate(
    frames: Sequence[FrameInput], factor: int = 2
) -> List[FrameInput]:
    """Every ``factor``-th frame, renumbered from 0; timestamps are kept."""
    if factor < 1:
        raise InvalidSpecError("decimation factor must be >= 1")
    kept = []
    for frame in frames[::factor]:
        number = frame.frame // factor
        kept.append(
            frame.copy(
                update={
                    "frame": number,
                    "detections": [
                        d.copy(update={"frame": number})
                        for d in frame.detections
                    ],
                }
            )
        )
    return kept


def decimate_tracks(
    objects: Sequence[TrackedObject], factor: int = 2
) -> List[TrackedObject]:
    """Ground-truth counterpart of :func:`decimate`."""
    if factor < 1:
        raise InvalidSpecError("decimation factor must be >= 1")
    return [
        o.copy(update={"frame": o.frame // factor})
        for o in objects
        if o.frame % factor == 0
    ]


def _parse_occlusions(value: str) -> List[Dict[str, int]]:
    events = []
    for item in filter(None, (v.strip() for v in value.split(";"))):
        agent, _, frames = item.partition(":")
        start, _, end = frames.partition("-")
        events.append(
            {
                "agent": int(agent),
                "start": int(start),
                "end": int(end or start),
            }
        )
    return events


_LIST_KEYS = {"motion_models", "tp_conf_beta", "fp_conf_beta", "speed_range"}


def build_scenario_spec(values: Dict[str, Any]) -> ScenarioSpec:
    raw: Dict[str, Any] = {}
    for key, value in values.items():
        if value is None:
            raise InvalidSpecError(f"{key}: missing value")
        if key not in ScenarioSpec.__fields__:
            raise InvalidSpecError(f"{key}: unknown scenario key")
        try:
            if key == "occlusions":
                raw[key] = _parse_occlusions(value)
            elif key in _LIST_KEYS:
                raw[key] = [v.strip() for v in value.split(",") if v.strip()]
            else:
                raw[key] = value
        except ValueError:
            raise InvalidSpecError(f"{key}: cannot parse {value!r}")
    try:
        return ScenarioSpec(**raw)
    except ValidationError as exc:
        error = exc.errors()[0]
        where = ".".join(str(part) for part in error["loc"])
        raise InvalidSpecError(f"{where}: {error['msg']}")


def read_scenario_spec(path: PathLike) -> ScenarioSpec:
    """Scenario from a ``key = value`` file.

    Lists are comma separated; occlusions read ``agent:start-end`` entries
    separated by semicolons, e.g. ``occlusions = 2:3-20``.
    """
    if not Path(path).is_file():
        raise InvalidSpecError(f"scenario file not found: {path}")
    text = read_text(path)
    return build_scenario_spec(dict(dotenv_values(stream=StringIO(text))))


def write_scenario(scenario: Scenario, out_dir: PathLike) -> Dict[str, Path]:
    """Write ground truth, detections and features under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "gt": out / GT_FILE,
        "detections": out / DETECTIONS_FILE,
        "features": out / FEATURES_FILE,
    }
    write_tracks(paths["gt"], scenario.gt)
    write_detections(paths["detections"], scenario.detections)
    write_feature_sidecar(paths["features"], scenario.features)
    return paths
