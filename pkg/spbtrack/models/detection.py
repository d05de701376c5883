import math

from typing import List, Optional

import numpy as np

from pydantic import BaseModel, Field, validator

from spbtrack.models.box import Box3D


def check_feature(feature: Optional[np.ndarray]) -> Optional[np.ndarray]:
    if feature is None:
        return None
    feature = np.asarray(feature, dtype=float)
    if feature.ndim != 1 or feature.size == 0:
        raise ValueError("feature must be a non-empty vector")
    if not np.all(np.isfinite(feature)):
        raise ValueError("feature entries must be finite")
    if not np.linalg.norm(feature) > 0.0:
        raise ValueError("feature must have a non-zero norm")
    return feature


class EgoPose(BaseModel):
    x_ego: float = 0.0
    y_ego: float = 0.0
    z_ego: float = 0.0

    @validator("x_ego", "y_ego", "z_ego")
    def check_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("ego pose must be finite")
        return v

    def as_array(self) -> np.ndarray:
        return np.array([self.x_ego, self.y_ego, self.z_ego])

    class Config:
        frozen = True


class Detection3D(BaseModel):
    frame: int = Field(ge=0)
    box: Box3D
    confidence: float
    feature: Optional[np.ndarray] = None
    class_label: str = "Pedestrian"

    @validator("confidence")
    def check_confidence(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("confidence must be finite")
        return v

    _check_feature = validator("feature", allow_reuse=True)(check_feature)

    class Config:
        arbitrary_types_allowed = True


class FrameInput(BaseModel):
    frame: int = Field(ge=0)
    timestamp: float
    detections: List[Detection3D] = Field(default_factory=list)
    ego: EgoPose = Field(default_factory=EgoPose)

    class Config:
        arbitrary_types_allowed = True


class TrackedObject(BaseModel):
    """One row of a ground-truth label file or a tracker result file."""

    frame: int = Field(ge=0)
    track_id: int
    box: Box3D
    score: Optional[float] = None
    class_label: str = "Pedestrian"


class DetectionSequence(BaseModel):
    frames: List[FrameInput] = Field(default_factory=list)
    confidence_normalized: bool = False
    skipped_lines: int = 0

    def __len__(self) -> int:
        return len(self.frames)
