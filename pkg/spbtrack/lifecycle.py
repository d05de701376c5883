"""Tracklet life cycle: birth, candidate/active pools, confidence smoothing,
distance-based decay, deletion and long-term memory of lost tracklets.
"""
import logging
import math

from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from spbtrack import filter as tracking_filter
from spbtrack.assoc import two_stage_associate
from spbtrack.constants import F1_SWEEP_STEPS, TrackStatus
from spbtrack.exceptions import EmptyInputError, OutOfOrderFrameError
from spbtrack.helpers import StageTimer
from spbtrack.models.config import LifecycleConfig, TrackerConfig
from spbtrack.models.detection import (
    Detection3D,
    EgoPose,
    FrameInput,
    TrackedObject,
)
from spbtrack.models.state import FilterState
from spbtrack.models.tracklet import Tracklet, TrackPool

logger = logging.getLogger(__name__)


def lpf_score(t_score: float, d_score: float, omega: float) -> float:
    """Low-pass blend ω·T_score + (1-ω)·D_score."""
    blended = omega * t_score + (1.0 - omega) * d_score
    return min(max(blended, 0.0), 1.0)


def cdd(
    track_pos: Sequence[float], ego: EgoPose, max_range: float
) -> float:
    """Distance from the ego origin divided by ``max_range``."""
    dx = track_pos[0] - ego.x_ego
    dy = track_pos[1] - ego.y_ego
    dz = track_pos[2] - ego.z_ego
    return math.sqrt(dx * dx + dy * dy + dz * dz) / max_range


def decay_lost(t: Tracklet, ego: EgoPose, cfg: LifecycleConfig) -> Tracklet:
    box = t.box
    decay = min(cdd((box.x, box.y, box.z), ego, cfg.max_range), 1.0)
    return t.evolve(
        score=t.score * (1.0 - decay),
        frames_lost=t.frames_lost + 1,
        status=TrackStatus.LOST,
        hits=0,
        age=t.age + 1,
    )


def blend_feature(
    previous: Optional[np.ndarray],
    observed: Optional[np.ndarray],
    decay: float,
) -> Optional[np.ndarray]:
    """Exponential moving average of matched detection embeddings."""
    if observed is None:
        return previous
    if previous is None or previous.shape != observed.shape:
        return observed
    blended = decay * previous + (1.0 - decay) * observed
    if not np.linalg.norm(blended) > 0.0:
        return observed
    return blended


def compute_f1_threshold(
    labeled: Sequence[Tuple[float, bool]], num_gt: Optional[int] = None
) -> float:
    """Confidence threshold in {0.00, ..., 1.00} that maximises F1.

    ``labeled`` holds (confidence, is_true_positive) pairs. Ground-truth
    objects the detector never found can be accounted for with ``num_gt``;
    by default every true positive is one ground-truth object. Ties go to
    the lowest threshold.
    """
    if len(labeled) == 0:
        raise EmptyInputError("no labeled detections to calibrate on")
    confidences = np.array([c for c, _ in labeled], dtype=float)
    is_tp = np.array([tp for _, tp in labeled], dtype=bool)
    total = int(is_tp.sum()) if num_gt is None else num_gt

    thresholds = np.arange(F1_SWEEP_STEPS) / (F1_SWEEP_STEPS - 1)
    kept = confidences[None, :] >= thresholds[:, None]
    tp = (kept & is_tp).sum(axis=1)
    fp = (kept & ~is_tp).sum(axis=1)
    fn = total - tp
    denominator = 2 * tp + fp + fn
    f1 = np.divide(
        2.0 * tp,
        denominator,
        out=np.zeros(len(thresholds)),
        where=denominator > 0,
    )
    return float(thresholds[int(np.argmax(f1))])


def _clamped(detection: Detection3D) -> float:
    return min(max(detection.confidence, 0.0), 1.0)


def _birth(
    track_id: int, detection: Detection3D, config: TrackerConfig
) -> Tracklet:
    return Tracklet(
        id=track_id,
        filter=tracking_filter.init_state(detection.box, config.filter),
        status=TrackStatus.CANDIDATE,
        score=_clamped(detection),
        feature=detection.feature,
        hits=1,
        last_box=detection.box,
    )


def _matched(
    t: Tracklet,
    detection: Detection3D,
    state: FilterState,
    config: TrackerConfig,
) -> Tracklet:
    lc = config.lifecycle
    score = lpf_score(t.score, _clamped(detection), lc.omega_lpf)
    return t.evolve(
        filter=state,
        score=score,
        hits=t.hits + 1,
        age=t.age + 1,
        frames_lost=0,
        status=(
            TrackStatus.ACTIVE
            if score >= lc.f1_threshold
            else TrackStatus.CANDIDATE
        ),
        last_box=detection.box,
        feature=blend_feature(
            t.feature, detection.feature, config.run.feature_decay
        ),
    )


def step_frame(
    pool: TrackPool,
    frame: FrameInput,
    config: TrackerConfig,
    timer: Optional[StageTimer] = None,
) -> Tuple[List[TrackedObject], TrackPool]:
    """Advance the pool by one frame; returns Active outputs and the new pool.

    Lost tracklets stay in the association every frame, coasting on the
    motion model, which is what lets an occluded person keep their id.
    """
    timer = timer or StageTimer()
    lc, run = config.lifecycle, config.run
    if pool.last_timestamp is not None:
        if frame.timestamp <= pool.last_timestamp:
            raise OutOfOrderFrameError(
                f"frame {frame.frame} at t={frame.timestamp} does not follow "
                f"t={pool.last_timestamp}"
            )
        dt = frame.timestamp - pool.last_timestamp
    else:
        dt = config.filter.dt

    detections = [
        d for d in frame.detections if d.confidence >= run.detection_prefilter
    ]

    with timer.stage("predict"):
        states = tracking_filter.predict_many(
            [t.filter for t in pool.tracklets],
            config.filter,
            dt,
            [
                t.frames_lost < run.covariance_freeze_after
                for t in pool.tracklets
            ],
        )
        predicted = [
            t.evolve(filter=state)
            for t, state in zip(pool.tracklets, states)
        ]

    with timer.stage("associate"):
        result = two_stage_associate(
            predicted,
            detections,
            config.assoc,
            high_conf_split=config.high_conf_split,
            max_pair_distance=run.max_pair_distance,
        )

    with timer.stage("update"):
        pairs = sorted(result.matches)
        updated = tracking_filter.update_many(
            [predicted[t].filter for t, _ in pairs],
            [detections[d].box.as_measurement() for _, d in pairs],
            [_clamped(detections[d]) for _, d in pairs],
            config.filter,
        )
        matched = {
            t: (detections[d], state)
            for (t, d), state in zip(pairs, updated)
        }

    with timer.stage("lifecycle"):
        survivors: List[Tracklet] = []
        deaths = 0
        for index, t in enumerate(predicted):
            if index in matched:
                detection, state = matched[index]
                survivors.append(_matched(t, detection, state, config))
                continue
            lost = decay_lost(t, frame.ego, lc)
            if (
                lost.score < lc.death_threshold
                or lost.frames_lost > lc.max_lost_frames
            ):
                logger.debug(
                    "tracklet %d deleted at frame %d", t.id, frame.frame
                )
                deaths += 1
                continue
            survivors.append(lost)

        next_id = pool.next_id
        births = 0
        for d_index in result.unmatched_detections:
            detection = detections[d_index]
            if detection.confidence < lc.f1_threshold:
                continue
            survivors.append(_birth(next_id, detection, config))
            logger.debug("tracklet %d born at frame %d", next_id, frame.frame)
            next_id += 1
            births += 1

        for index, t in enumerate(survivors):
            if (
                t.status == TrackStatus.CANDIDATE
                and t.hits >= lc.candidate_promote_hits
                and t.score >= lc.f1_threshold
            ):
                survivors[index] = t.evolve(status=TrackStatus.ACTIVE)

        outputs = [
            t.output(frame.frame)
            for t in sorted(survivors, key=lambda t: t.id)
            if t.status == TrackStatus.ACTIVE
        ]

    new_pool = TrackPool.construct(
        tracklets=survivors,
        next_id=next_id,
        last_timestamp=frame.timestamp,
        births=pool.births + births,
        deaths=pool.deaths + deaths,
    )
    return outputs, new_pool


class Tracker:
    """Single-writer owner of a track pool for one sequence."""

    def __init__(self, config: Optional[TrackerConfig] = None) -> None:
        self.config = config or TrackerConfig()
        self.pool = TrackPool()
        self.timer = StageTimer()
        self.frames_processed = 0

    def step(self, frame: FrameInput) -> List[TrackedObject]:
        outputs, self.pool = step_frame(
            self.pool, frame, self.config, self.timer
        )
        self.frames_processed += 1
        return outputs

    def run(self, frames: Iterable[FrameInput]) -> List[TrackedObject]:
        outputs: List[TrackedObject] = []
        for frame in frames:
            outputs.extend(self.step(frame))
        logger.info(
            "tracked %d frames: %d births, %d deaths, %d tracklets alive",
            self.frames_processed,
            self.pool.births,
            self.pool.deaths,
            len(self.pool),
        )
        return outputs
