import time

from typing import List, Tuple

import numpy as np
import pytest

from spbtrack import filter as tracking_filter
from spbtrack.constants import TrackStatus
from spbtrack.exceptions import EmptyInputError, OutOfOrderFrameError
from spbtrack.lifecycle import (
    Tracker,
    blend_feature,
    cdd,
    compute_f1_threshold,
    decay_lost,
    lpf_score,
    step_frame,
)
from spbtrack.metrics import evaluate_sequence
from spbtrack.models.box import Box3D
from spbtrack.models.config import (
    FilterConfig,
    LifecycleConfig,
    TrackerConfig,
)
from spbtrack.models.detection import EgoPose, FrameInput, TrackedObject
from spbtrack.models.scenario import ScenarioSpec
from spbtrack.models.tracklet import Tracklet, TrackPool
from spbtrack.simgen import generate
from tests.conftest import make_detection, make_frames, make_track, pedestrian

BYSTANDER = np.array([1.0, 0.0, 0.0, 0.2])
PERSON = np.array([0.0, 1.0, 0.3, 0.0])
OCCLUDED = range(3, 21)


def make_tracklet(box: Box3D, score: float = 0.8) -> Tracklet:
    return Tracklet(
        id=1,
        filter=tracking_filter.init_state(box, FilterConfig()),
        score=score,
        last_box=box,
    )


@pytest.mark.parametrize(
    "t_score, d_score, omega, expected",
    [(0.8, 0.2, 0.999, 0.7994), (0.6, 0.6, 0.3, 0.6), (0.9, 0.5, 0.7, 0.78)],
)
def test_lpf_score(
    t_score: float, d_score: float, omega: float, expected: float
) -> None:
    assert lpf_score(t_score, d_score, omega) == pytest.approx(expected)


def test_cdd() -> None:
    ego = EgoPose()
    assert cdd((0.0, 0.0, 0.0), ego, 50.0) == 0.0
    assert cdd((3.0, 4.0, 0.0), ego, 50.0) == pytest.approx(0.1)
    assert cdd((50.0, 0.0, 0.0), ego, 50.0) == pytest.approx(1.0)
    assert cdd((4.0, 5.0, 1.0), EgoPose(x_ego=1, y_ego=1, z_ego=1), 5) == 1.0


def test_decay_lost() -> None:
    cfg = LifecycleConfig()
    ego = EgoPose(z_ego=0.875)
    lost = decay_lost(make_tracklet(pedestrian(12.5, 0.0)), ego, cfg)
    assert lost.score == pytest.approx(0.6)
    assert lost.status == TrackStatus.LOST
    assert lost.frames_lost == 1

    at_ego = decay_lost(make_tracklet(pedestrian(0.0, 0.0)), ego, cfg)
    assert at_ego.score == pytest.approx(0.8)

    beyond = decay_lost(make_tracklet(pedestrian(80.0, 0.0)), ego, cfg)
    assert beyond.score == 0.0


def test_blend_feature() -> None:
    previous, observed = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    np.testing.assert_allclose(
        blend_feature(previous, observed, 0.9), [0.9, 0.1]
    )
    assert blend_feature(previous, None, 0.9) is previous
    assert blend_feature(None, observed, 0.9) is observed


def test_f1_threshold_keeps_everything_when_all_true() -> None:
    labeled = [(0.3, True), (0.7, True), (0.9, True)]
    assert compute_f1_threshold(labeled) == 0.0


def test_f1_threshold_separable_ties_to_lowest() -> None:
    labeled = [(0.1, False), (0.39, False), (0.6, True), (0.8, True)]
    assert compute_f1_threshold(labeled) == pytest.approx(0.40)


def brute_force_f1_threshold(
    labeled: List[Tuple[float, bool]], num_gt: int
) -> float:
    best, best_f1 = 0.0, -1.0
    for k in range(101):
        threshold = k / 100
        tp = sum(1 for c, ok in labeled if c >= threshold and ok)
        fp = sum(1 for c, ok in labeled if c >= threshold and not ok)
        fn = num_gt - tp
        f1 = 2 * tp / (2 * tp + fp + fn) if tp + fp + fn else 0.0
        if f1 > best_f1:
            best, best_f1 = threshold, f1
    return best


def test_f1_threshold_matches_brute_force(rng: np.random.Generator) -> None:
    for _ in range(20):
        confidences = np.round(rng.uniform(size=60), 3)
        truth = rng.uniform(size=60) < confidences
        labeled = list(zip(confidences.tolist(), truth.tolist()))
        num_gt = int(truth.sum()) + 5
        assert compute_f1_threshold(labeled, num_gt) == pytest.approx(
            brute_force_f1_threshold(labeled, num_gt)
        )


def test_f1_threshold_needs_input() -> None:
    with pytest.raises(EmptyInputError):
        compute_f1_threshold([])


def test_birth_is_a_silent_candidate() -> None:
    frame = FrameInput(
        frame=0, timestamp=0.0, detections=[make_detection(pedestrian(1, 1))]
    )
    outputs, pool = step_frame(TrackPool(), frame, TrackerConfig())
    assert outputs == []
    assert len(pool) == 1
    assert pool.tracklets[0].status == TrackStatus.CANDIDATE
    assert pool.tracklets[0].score == pytest.approx(0.9)


def test_second_hit_promotes_to_active() -> None:
    frames = make_frames(
        [[make_detection(pedestrian(1.0, 1.0 + 0.05 * i))] for i in range(3)]
    )
    tracker = Tracker()
    outputs = [tracker.step(frame) for frame in frames]
    assert outputs[0] == []
    assert [o.track_id for o in outputs[1]] == [1]
    assert tracker.pool.tracklets[0].status == TrackStatus.ACTIVE


def test_matched_candidate_is_promoted_on_score_alone() -> None:
    config = TrackerConfig(
        lifecycle=LifecycleConfig(candidate_promote_hits=5)
    )
    frames = make_frames(
        [[make_detection(pedestrian(1.0, 1.0 + 0.05 * i))] for i in range(2)]
    )
    tracker = Tracker(config)
    outputs = [tracker.step(frame) for frame in frames]
    assert outputs[0] == []
    assert [o.track_id for o in outputs[1]] == [1]
    assert tracker.pool.tracklets[0].hits == 2


WALKER_A = np.array([1.0, 0.0, 0.0, 0.0])
WALKER_B = np.array([0.0, 1.0, 0.0, 0.0])


def crossing_walkers() -> List[FrameInput]:
    """A walks +x along y = 0.5 and B walks -x along y = -0.5.

    B is missed in frame 2; a faint clutter detection shows up in frame 4.
    """
    a_conf = [0.9, 0.8, 0.9, 0.7, 0.9]
    b_conf = [0.6, 0.8, None, 0.9, 0.4]
    per_frame = []
    for f in range(5):
        detections = [
            make_detection(
                pedestrian(-0.2 + 0.1 * f, 0.5), a_conf[f], f, WALKER_A
            )
        ]
        if b_conf[f] is not None:
            detections.append(
                make_detection(
                    pedestrian(0.2 - 0.1 * f, -0.5), b_conf[f], f, WALKER_B
                )
            )
        if f == 4:
            detections.append(make_detection(pedestrian(10, 10), 0.3, f))
        per_frame.append(detections)
    return make_frames(per_frame)


def test_crossing_walkers_trace() -> None:
    config = TrackerConfig(lifecycle=LifecycleConfig(max_range=1000.0))
    tracker = Tracker(config)
    emitted = []
    scores = []
    statuses = []
    for frame in crossing_walkers():
        emitted.append([o.track_id for o in tracker.step(frame)])
        pool = {t.id: t for t in tracker.pool.tracklets}
        scores.append((pool[1].score, pool[2].score))
        statuses.append((pool[1].status, pool[2].status))

    assert emitted == [[], [1, 2], [1], [1, 2], [1, 2]]
    # A: 0.9, then 0.7 T + 0.3 D each frame.
    expected_a = [0.9, 0.87, 0.879, 0.8253, 0.84771]
    assert [a for a, _ in scores] == pytest.approx(expected_a, abs=1e-9)
    # B loses about 0.1% of its score (distance over max_range) when missed.
    expected_b = [0.6, 0.66, 0.6593, 0.7315, 0.6321]
    assert [b for _, b in scores] == pytest.approx(expected_b, abs=1e-3)
    assert scores[2][1] < 0.66
    assert statuses[0] == (TrackStatus.CANDIDATE, TrackStatus.CANDIDATE)
    assert statuses[2] == (TrackStatus.ACTIVE, TrackStatus.LOST)
    assert statuses[4] == (TrackStatus.ACTIVE, TrackStatus.ACTIVE)
    assert len(tracker.pool) == 2, "Faint clutter is never born"
    assert tracker.pool.births == 2


def test_low_confidence_detection_is_not_born() -> None:
    frame = FrameInput(
        frame=0,
        timestamp=0.0,
        detections=[make_detection(pedestrian(1, 1), confidence=0.3)],
    )
    _, pool = step_frame(TrackPool(), frame, TrackerConfig())
    assert len(pool) == 0


def test_frames_must_advance() -> None:
    tracker = Tracker()
    tracker.step(FrameInput(frame=0, timestamp=0.5))
    with pytest.raises(OutOfOrderFrameError):
        tracker.step(FrameInput(frame=1, timestamp=0.5))


def occlusion_scenario() -> Tuple[List[FrameInput], List[TrackedObject]]:
    """Bystander visible throughout; a person walks near the sensor, is
    hidden in frames 3-20 and reappears in frame 21.
    """
    per_frame = []
    gt = []
    for f in range(31):
        bystander = pedestrian(-3.0, 2.0)
        person = pedestrian(1.0, 0.2 * f * 0.1)
        gt.append(make_track(f, 1, bystander, None))
        detections = [make_detection(bystander, 0.95, f, BYSTANDER)]
        if f >= 1 and f not in OCCLUDED:
            gt.append(make_track(f, 2, person, None))
            detections.append(make_detection(person, 0.95, f, PERSON))
        per_frame.append(detections)
    return make_frames(per_frame), gt


def test_lost_tracklet_keeps_its_id_through_occlusion() -> None:
    frames, gt = occlusion_scenario()
    tracker = Tracker()
    outputs = []
    scores = []
    for frame in frames:
        emitted = tracker.step(frame)
        outputs.extend(emitted)
        ids = [o.track_id for o in emitted]
        assert len(ids) == len(set(ids)), "Duplicate id in one frame"
        if frame.frame in OCCLUDED:
            person = [t for t in tracker.pool.tracklets if t.id == 2]
            assert person and person[0].status == TrackStatus.LOST
            scores.append(person[0].score)

    assert all(a > b for a, b in zip(scores, scores[1:])), (
        "Score should decay every lost frame"
    )
    reappearance = [o.track_id for o in outputs if o.frame == 21]
    assert 2 in reappearance, "The person is re-identified as id 2"

    metrics = evaluate_sequence("occlusion", gt, outputs)
    assert metrics.clear.ids == 0


def test_without_lost_pool_the_identity_switches() -> None:
    frames, gt = occlusion_scenario()
    config = TrackerConfig(lifecycle=LifecycleConfig(max_lost_frames=0))
    outputs = Tracker(config).run(frames)
    metrics = evaluate_sequence("occlusion", gt, outputs)
    assert metrics.clear.ids >= 1


def test_decay_free_baseline_configuration() -> None:
    config = TrackerConfig(
        lifecycle=LifecycleConfig(f1_threshold=0.0, death_threshold=0.0)
    )
    faint = make_detection(pedestrian(1.0, 0.0), confidence=0.05)
    frames = make_frames([[faint], [faint]])
    outputs = Tracker(config).run(frames)
    assert [o.track_id for o in outputs] == [1]


@pytest.mark.slow
def test_pool_stays_bounded_over_long_runs() -> None:
    spec = ScenarioSpec(
        n_pedestrians=6, duration=1000.0, fp_rate=1.0, dropout_rate=0.1
    )
    tracker = Tracker()
    largest = 0
    for frame in generate(spec).detections.frames:
        tracker.step(frame)
        largest = max(largest, len(tracker.pool))
    pool = tracker.pool
    assert pool.births - pool.deaths == len(pool)
    assert largest < 100, f"Pool grew to {largest} tracklets"


@pytest.mark.slow
def test_throughput_with_twenty_pedestrians() -> None:
    spec = ScenarioSpec(n_pedestrians=20, duration=30.0, fp_rate=0.3)
    frames = generate(spec).detections.frames
    Tracker().run(frames[:10])
    tracker = Tracker()
    start = time.perf_counter()
    tracker.run(frames)
    elapsed = time.perf_counter() - start
    fps = len(frames) / elapsed
    assert fps >= 100.0, f"{fps:.0f} frames per second"
