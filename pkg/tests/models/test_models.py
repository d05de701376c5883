import math

import numpy as np
import pytest

from faker import Faker
from pydantic import ValidationError

from spbtrack import filter as tracking_filter
from spbtrack.constants import TrackStatus
from spbtrack.models.assoc import AssocResult
from spbtrack.models.box import Box3D
from spbtrack.models.config import FilterConfig, LifecycleConfig
from spbtrack.models.detection import Detection3D, EgoPose
from spbtrack.models.report import EvalReport, REPORT_COLUMNS
from spbtrack.models.scenario import OcclusionEvent, ScenarioSpec
from spbtrack.models.state import FilterState, TrackState
from spbtrack.models.tracklet import Tracklet
from tests.conftest import make_box, pedestrian


def test_box_wraps_yaw() -> None:
    box = pedestrian(0.0, 0.0, theta=3 * math.pi / 2)
    assert box.theta == pytest.approx(-math.pi / 2)
    assert box.volume == pytest.approx(0.63)
    assert box.z_range == pytest.approx((0.0, 1.75))


@pytest.mark.parametrize(
    "field, value", [("w", 0.0), ("h", -1.0), ("x", math.nan)]
)
def test_box_rejects_invalid_values(field: str, value: float) -> None:
    values = pedestrian(1.0, 1.0).dict()
    values[field] = value
    with pytest.raises(ValidationError):
        Box3D(**values)


def test_box_measurement_round_trip(faker: Faker) -> None:
    box = make_box(faker)
    assert Box3D.from_measurement(box.as_measurement()) == box


def test_track_state_vector_layout() -> None:
    box = pedestrian(1.0, 2.0, theta=0.3)
    state = TrackState.from_box(box)
    vector = state.to_vector()
    assert vector.tolist() == [
        1.0, 2.0, 0.875, 0.3, 0.0, 0.0, 0.0, 0.0, 0.6, 0.6, 1.75
    ]
    assert TrackState.from_vector(vector) == state


def test_filter_state_checks_shapes() -> None:
    cfg = FilterConfig()
    with pytest.raises(ValidationError):
        FilterState(x=np.zeros(7), P=cfg.P_init, R=cfg.R_init, Q=cfg.Q)
    with pytest.raises(ValidationError):
        FilterState(x=np.zeros(11), P=cfg.R_init, R=cfg.R_init, Q=cfg.Q)


def test_filter_config_checks_diagonals() -> None:
    with pytest.raises(ValidationError):
        FilterConfig(r_init_diag=[0.1] * 6)
    with pytest.raises(ValidationError):
        FilterConfig(q_diag=[-0.1] + [0.1] * 10)
    with pytest.raises(ValidationError):
        FilterConfig(kappa=-11.0)


def test_lifecycle_thresholds_are_ordered() -> None:
    with pytest.raises(ValidationError):
        LifecycleConfig(f1_threshold=0.2, death_threshold=0.3)
    baseline = LifecycleConfig(f1_threshold=0.0, death_threshold=0.0)
    assert baseline.death_threshold == 0.0


def test_detection_feature_must_be_usable() -> None:
    box = pedestrian(0.0, 0.0)
    with pytest.raises(ValidationError):
        Detection3D(frame=0, box=box, confidence=0.5, feature=np.zeros(4))
    with pytest.raises(ValidationError):
        Detection3D(frame=0, box=box, confidence=math.inf)
    detection = Detection3D(
        frame=0, box=box, confidence=0.5, feature=np.array([1, 2])
    )
    assert detection.feature.dtype == float


def test_ego_pose_must_be_finite() -> None:
    with pytest.raises(ValidationError):
        EgoPose(x_ego=math.inf)


def test_lost_tracklet_has_missed_a_frame() -> None:
    box = pedestrian(0.0, 0.0)
    with pytest.raises(ValidationError):
        Tracklet(
            id=1,
            filter=tracking_filter.init_state(box, FilterConfig()),
            status=TrackStatus.LOST,
            score=0.5,
            last_box=box,
        )


def test_assoc_result_is_one_to_one() -> None:
    with pytest.raises(ValidationError):
        AssocResult(matches=[(0, 0), (1, 0)])
    with pytest.raises(ValidationError):
        AssocResult(matches=[(0, 0)], unmatched_tracks=[0])


def test_scenario_validation() -> None:
    with pytest.raises(ValidationError):
        ScenarioSpec(fp_rate=1.5)
    with pytest.raises(ValidationError):
        ScenarioSpec(
            n_pedestrians=2, occlusions=[{"agent": 3, "start": 0, "end": 1}]
        )
    with pytest.raises(ValidationError):
        OcclusionEvent(agent=1, start=5, end=4)
    assert ScenarioSpec(duration=2.0, frame_rate=5.0).n_frames == 10


def test_empty_report_has_the_columns() -> None:
    frame = EvalReport().to_frame()
    assert list(frame.columns) == REPORT_COLUMNS
    assert frame["sequence"].tolist() == ["all"]
