from typing import Any, Dict, List, Tuple

from pydantic import BaseModel, Field, root_validator, validator

from spbtrack.constants import MotionModel


class OcclusionEvent(BaseModel):
    """Agent ``agent`` (1-based) is hidden in frames start..end inclusive."""

    agent: int = Field(ge=1)
    start: int = Field(ge=0)
    end: int = Field(ge=0)

    @root_validator(skip_on_failure=True)
    def check_order(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if values["end"] < values["start"]:
            raise ValueError("occlusion ends before it starts")
        return values


class ScenarioSpec(BaseModel):
    n_pedestrians: int = Field(default=8, ge=1)
    duration: float = Field(default=20.0, gt=0.0)
    frame_rate: float = Field(default=10.0, gt=0.0)
    # Cycled over agents: agent i uses motion_models[i % len].
    motion_models: List[MotionModel] = Field(
        default=[MotionModel.LINEAR], min_items=1
    )
    occlusions: List[OcclusionEvent] = Field(default_factory=list)
    pos_sigma: float = Field(default=0.1, ge=0.0)
    yaw_sigma: float = Field(default=0.05, ge=0.0)
    dim_sigma: float = Field(default=0.02, ge=0.0)
    dropout_rate: float = Field(default=0.0, ge=0.0, le=1.0)
    fp_rate: float = Field(default=0.0, ge=0.0, le=1.0)
    tp_conf_beta: Tuple[float, float] = (8.0, 2.0)
    fp_conf_beta: Tuple[float, float] = (2.0, 8.0)
    # True-positive noise variance scales with 1 / confidence, mean preserved.
    confidence_noise: bool = True
    feature_dim: int = Field(default=16, ge=1)
    feature_noise: float = Field(default=0.1, ge=0.0)
    area: float = Field(default=15.0, gt=0.0)
    speed_range: Tuple[float, float] = (0.8, 1.6)
    seed: int = 0

    @validator("tp_conf_beta", "fp_conf_beta")
    def check_beta(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if v[0] <= 0 or v[1] <= 0:
            raise ValueError("beta parameters must be positive")
        return v

    @validator("confidence_noise", always=True)
    def check_noise_coupling(cls, v: bool, values: Dict[str, Any]) -> bool:
        beta = values.get("tp_conf_beta")
        if v and beta is not None and beta[0] <= 1.0:
            raise ValueError(
                "confidence_noise needs tp_conf_beta with a first "
                "parameter above 1"
            )
        return v

    @validator("speed_range")
    def check_speeds(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if v[0] < 0 or v[1] < v[0]:
            raise ValueError("speed range must satisfy 0 <= low <= high")
        return v

    @validator("occlusions")
    def check_agents(
        cls, v: List[OcclusionEvent], values: Dict[str, Any]
    ) -> List[OcclusionEvent]:
        n = values.get("n_pedestrians")
        if n is not None and any(event.agent > n for event in v):
            raise ValueError("occlusion refers to an unknown agent")
        return v

    @property
    def mean_inverse_confidence(self) -> float:
        """E[1 / c] for c ~ Beta(a, b), finite for a > 1."""
        a, b = self.tp_conf_beta
        return (a + b - 1.0) / (a - 1.0)

    @property
    def n_frames(self) -> int:
        return int(round(self.duration * self.frame_rate))

    class Config:
        extra = "forbid"
