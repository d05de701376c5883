from typing import Any, Dict, List, Optional

import numpy as np

from pydantic import BaseModel, Extra, Field, root_validator, validator

from spbtrack.constants import (
    DEFAULT_FS_GATE,
    MEASUREMENT_DIM,
    STATE_DIM,
    AssociationMetric,
    FilterVariant,
)
from spbtrack.settings import settings


def _check_diag(values: List[float], size: int) -> List[float]:
    if len(values) != size:
        raise ValueError(f"expected {size} values, got {len(values)}")
    if any(not v >= 0.0 for v in values):
        raise ValueError("variances must be non-negative")
    return values


class FilterConfig(BaseModel):
    kappa: float = 0.0
    alpha_adapt: float = Field(default=0.2, ge=0.0, lt=1.0)
    r_init_diag: List[float] = Field(
        default=[0.04, 0.04, 0.04, 0.1, 0.01, 0.01, 0.01]
    )
    q_diag: List[float] = Field(
        default=[
            0.01,
            0.01,
            0.001,
            0.01,
            0.05,
            0.05,
            0.1,
            0.1,
            0.0001,
            0.0001,
            0.0001,
        ]
    )
    p_init_diag: List[float] = Field(
        default=[0.1, 0.1, 0.1, 0.1, 1.0, 1.0, 1.0, 1.0, 0.01, 0.01, 0.01]
    )
    variant: FilterVariant = FilterVariant.DUKF
    dt: float = Field(default=0.1, gt=0.0)

    @validator("kappa")
    def check_kappa(cls, v: float) -> float:
        if STATE_DIM + v <= 0:
            raise ValueError(f"L + kappa must be positive (L={STATE_DIM})")
        return v

    @validator("r_init_diag")
    def check_r_init(cls, v: List[float]) -> List[float]:
        return _check_diag(v, MEASUREMENT_DIM)

    @validator("q_diag", "p_init_diag")
    def check_state_diag(cls, v: List[float]) -> List[float]:
        return _check_diag(v, STATE_DIM)

    @property
    def R_init(self) -> np.ndarray:
        return np.diag(self.r_init_diag)

    @property
    def Q(self) -> np.ndarray:
        return np.diag(self.q_diag)

    @property
    def P_init(self) -> np.ndarray:
        return np.diag(self.p_init_diag)

    class Config:
        extra = Extra.forbid
        validate_assignment = True


class AssocConfig(BaseModel):
    omega_assoc: float = Field(default=0.5, gt=0.0, lt=1.0)
    mciou_gate: float = 0.1
    fs_gate: float = DEFAULT_FS_GATE
    # None: use the lifecycle F1 threshold.
    high_conf_split: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    metric: AssociationMetric = AssociationMetric.MCIOU_FS

    class Config:
        extra = Extra.forbid
        validate_assignment = True


class LifecycleConfig(BaseModel):
    f1_threshold: float = Field(default=0.5, ge=0.0, le=1.0)
    death_threshold: float = Field(default=0.1, ge=0.0, le=1.0)
    omega_lpf: float = Field(default=0.7, gt=0.0, lt=1.0)
    max_range: float = Field(default=50.0, gt=0.0)
    candidate_promote_hits: int = Field(default=2, ge=1)
    max_lost_frames: int = Field(default=60, ge=0)

    @root_validator(skip_on_failure=True)
    def check_thresholds(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        death, f1 = values["death_threshold"], values["f1_threshold"]
        # Both zero is the decay-free baseline configuration.
        if death >= f1 and not death == f1 == 0.0:
            raise ValueError(
                "death_threshold must be below f1_threshold "
                f"({death} >= {f1})"
            )
        return values

    class Config:
        extra = Extra.forbid
        validate_assignment = True


class RunOptions(BaseModel):
    frame_rate: float = Field(default=10.0, gt=0.0)
    detection_prefilter: float = Field(default=0.0, ge=0.0, le=1.0)
    max_pair_distance: float = Field(default=3.0, gt=0.0)
    feature_decay: float = Field(default=0.9, ge=0.0, lt=1.0)
    covariance_freeze_after: int = Field(default=10, ge=1)
    seed: int = 0
    workers: int = Field(default=settings.SPBTRACK_WORKERS, ge=1)

    class Config:
        extra = Extra.forbid
        validate_assignment = True


class TrackerConfig(BaseModel):
    filter: FilterConfig = Field(default_factory=FilterConfig)
    assoc: AssocConfig = Field(default_factory=AssocConfig)
    lifecycle: LifecycleConfig = Field(default_factory=LifecycleConfig)
    run: RunOptions = Field(default_factory=RunOptions)

    @property
    def high_conf_split(self) -> float:
        if self.assoc.high_conf_split is not None:
            return self.assoc.high_conf_split
        return self.lifecycle.f1_threshold

    def flat(self) -> Dict[str, Any]:
        """Flat ``key -> value`` view, the shape of the config file."""
        flat: Dict[str, Any] = {}
        for section in (self.filter, self.assoc, self.lifecycle, self.run):
            flat.update(section.dict())
        return flat

    class Config:
        extra = Extra.forbid
