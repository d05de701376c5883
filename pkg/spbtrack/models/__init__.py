from .assoc import AssocResult
from .box import Box3D, OverlapScores
from .config import (
    AssocConfig,
    FilterConfig,
    LifecycleConfig,
    RunOptions,
    TrackerConfig,
)
from .detection import (
    Detection3D,
    DetectionSequence,
    EgoPose,
    FrameInput,
    TrackedObject,
)
from .report import (
    ClearMot,
    EvalReport,
    FrameMatch,
    RecallSweep,
    RunManifest,
    SequenceMetrics,
)
from .scenario import OcclusionEvent, ScenarioSpec
from .state import FilterState, SigmaSet, TrackState
from .tracklet import Tracklet, TrackPool
