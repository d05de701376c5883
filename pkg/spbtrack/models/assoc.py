from typing import Any, Dict, List, Tuple

from pydantic import BaseModel, Field, root_validator


class AssocResult(BaseModel):
    matches: List[Tuple[int, int]] = Field(default_factory=list)
    unmatched_tracks: List[int] = Field(default_factory=list)
    unmatched_detections: List[int] = Field(default_factory=list)
    # Subset of ``matches`` created by the feature-similarity rescue.
    rescued: List[Tuple[int, int]] = Field(default_factory=list)

    @root_validator(skip_on_failure=True)
    def check_one_to_one(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        tracks = [t for t, _ in values["matches"]] + values["unmatched_tracks"]
        dets = [d for _, d in values["matches"]] + values[
            "unmatched_detections"
        ]
        if len(set(tracks)) != len(tracks) or len(set(dets)) != len(dets):
            raise ValueError("an index appears more than once")
        return values
