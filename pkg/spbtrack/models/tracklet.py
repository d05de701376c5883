from typing import Any, Dict, List, Optional

import numpy as np

from pydantic import BaseModel, Field, root_validator, validator

from spbtrack.constants import TrackStatus
from spbtrack.models.box import Box3D
from spbtrack.models.detection import TrackedObject, check_feature
from spbtrack.models.state import FilterState


class Tracklet(BaseModel):
    id: int = Field(ge=1)
    filter: FilterState
    status: TrackStatus = TrackStatus.CANDIDATE
    score: float = Field(ge=0.0, le=1.0)
    feature: Optional[np.ndarray] = None
    hits: int = Field(default=1, ge=0)
    age: int = Field(default=0, ge=0)
    frames_lost: int = Field(default=0, ge=0)
    last_box: Box3D

    _check_feature = validator("feature", allow_reuse=True)(check_feature)

    @root_validator(skip_on_failure=True)
    def check_lost(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if values["status"] == TrackStatus.LOST and values["frames_lost"] < 1:
            raise ValueError("a lost tracklet has missed at least one frame")
        return values

    @property
    def box(self) -> Box3D:
        return self.filter.box

    def evolve(self, **changes: Any) -> "Tracklet":
        """Copy with ``changes`` applied, skipping validation."""
        values = {**self.__dict__, **changes}
        return Tracklet.construct(_fields_set=self.__fields_set__, **values)

    def output(self, frame: int) -> TrackedObject:
        return TrackedObject.construct(
            frame=frame, track_id=self.id, box=self.box, score=self.score
        )

    class Config:
        arbitrary_types_allowed = True


class TrackPool(BaseModel):
    tracklets: List[Tracklet] = Field(default_factory=list)
    next_id: int = 1
    last_timestamp: Optional[float] = None
    births: int = 0
    deaths: int = 0

    def __len__(self) -> int:
        return len(self.tracklets)

    def snapshot(self) -> "TrackPool":
        return self.copy(update={"tracklets": list(self.tracklets)})
