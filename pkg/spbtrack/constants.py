import math

from enum import Enum


class FilterVariant(str, Enum):
    KF = "kf"
    UKF = "ukf"
    DUKF = "dukf"


class TrackStatus(str, Enum):
    CANDIDATE = "candidate"
    ACTIVE = "active"
    LOST = "lost"


class AssociationMetric(str, Enum):
    GIOU = "giou"
    MCIOU = "mciou"
    MCIOU_FS = "mciou_fs"


# Generative models for simulated pedestrians.
class MotionModel(str, Enum):
    LINEAR = "linear"
    SINUSOIDAL_WEAVE = "sinusoidal-weave"
    STOP_AND_GO = "stop-and-go"
    RANDOM_TURN = "random-turn"


STATE_DIM = 11
MEASUREMENT_DIM = 7

# State vector layout: [x, y, z, θ, v_x, v_y, a_x, a_y, w, l, h]
IX, IY, IZ, ITHETA = 0, 1, 2, 3
IVX, IVY, IAX, IAY = 4, 5, 6, 7
IW, IL, IH = 8, 9, 10
MEASURED_STATES = (IX, IY, IZ, ITHETA, IW, IL, IH)

MIN_DIMENSION = 0.05
CONFIDENCE_FLOOR = 0.05
# Adapted measurement variances stay within this factor of R_init.
R_INFLATION_CAP = 1.0 / CONFIDENCE_FLOOR
SPD_EPSILON = 1e-9
GIOU_DENOMINATOR_FLOOR = 1e-9

PEDESTRIAN_CLASSES = frozenset({"pedestrian", "person"})
KITTI_CLASSES = frozenset(
    {
        "car",
        "van",
        "truck",
        "pedestrian",
        "person_sitting",
        "cyclist",
        "tram",
        "misc",
        "dontcare",
    }
)

# KITTI tracking validation sequences used for pedestrian evaluation.
KITTI_VAL_SEQUENCES = (1, 6, 8, 10, 12, 13, 14, 15, 16, 18, 19)

DEFAULT_IOU_THRESHOLD = 0.25
RECALL_SAMPLE_POINTS = 41
# Largest frame index accepted from KITTI files.
MAX_FRAME_INDEX = 100_000
F1_SWEEP_STEPS = 101

DEFAULT_FS_GATE = math.exp(0.7)
