import math

from typing import Sequence

import numpy as np

from pydantic import BaseModel, Field, validator

from spbtrack.helpers import wrap_angle


class Box3D(BaseModel):
    """Gravity-aligned box. (x, y, z) is the geometric centre in metres,
    ``theta`` the yaw around +Z, ``l`` runs along the heading and ``w``
    across it.
    """

    x: float
    y: float
    z: float
    theta: float = 0.0
    w: float = Field(gt=0)
    l: float = Field(gt=0)  # noqa: E741
    h: float = Field(gt=0)

    @validator("x", "y", "z", "theta")
    def check_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v

    @validator("theta")
    def normalize_theta(cls, v: float) -> float:
        return wrap_angle(v)

    @property
    def volume(self) -> float:
        return self.w * self.l * self.h

    @property
    def footprint(self) -> float:
        return self.w * self.l

    @property
    def z_range(self) -> tuple[float, float]:
        return self.z - self.h / 2.0, self.z + self.h / 2.0

    def as_measurement(self) -> np.ndarray:
        """[x, y, z, θ, w, l, h], the order the filter measures in."""
        return np.array(
            [self.x, self.y, self.z, self.theta, self.w, self.l, self.h]
        )

    @classmethod
    def from_measurement(cls, values: Sequence[float]) -> "Box3D":
        x, y, z, theta, w, l, h = (float(v) for v in values)  # noqa: E741
        return cls(x=x, y=y, z=z, theta=theta, w=w, l=l, h=h)

    class Config:
        frozen = True


class OverlapScores(BaseModel):
    iou3d: float = Field(ge=0.0, le=1.0)
    giou3d: float = Field(gt=-1.0, le=1.0)
    mciou: float

    class Config:
        frozen = True
