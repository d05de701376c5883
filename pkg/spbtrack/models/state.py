from typing import Optional

import numpy as np

from pydantic import BaseModel, validator

from spbtrack.constants import (
    IH,
    IL,
    ITHETA,
    IW,
    IX,
    IY,
    IZ,
    MEASUREMENT_DIM,
    STATE_DIM,
)
from spbtrack.models.box import Box3D


class TrackState(BaseModel):
    x: float
    y: float
    z: float
    theta: float
    v_x: float = 0.0
    v_y: float = 0.0
    a_x: float = 0.0
    a_y: float = 0.0
    w: float
    l: float  # noqa: E741
    h: float

    def to_vector(self) -> np.ndarray:
        return np.array(
            [
                self.x,
                self.y,
                self.z,
                self.theta,
                self.v_x,
                self.v_y,
                self.a_x,
                self.a_y,
                self.w,
                self.l,
                self.h,
            ]
        )

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> "TrackState":
        names = list(cls.__fields__)
        return cls(**{name: float(v) for name, v in zip(names, vector)})

    @classmethod
    def from_box(cls, box: Box3D) -> "TrackState":
        return cls(
            x=box.x,
            y=box.y,
            z=box.z,
            theta=box.theta,
            w=box.w,
            l=box.l,
            h=box.h,
        )


def _square(name: str, size: int, matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape != (size, size):
        raise ValueError(f"{name} must be {size}x{size}, got {matrix.shape}")
    return matrix


class FilterState(BaseModel):
    """Posterior (or prior) of one tracklet.

    ``x`` is the state vector laid out as :class:`TrackState`; ``R`` is the
    running measurement covariance that the adaptive variant rewrites.
    """

    x: np.ndarray
    P: np.ndarray
    R: np.ndarray
    Q: np.ndarray

    @validator("x")
    def check_x(cls, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (STATE_DIM,):
            raise ValueError(f"state must have {STATE_DIM} entries")
        return v

    @validator("P", "Q")
    def check_state_cov(cls, v: np.ndarray) -> np.ndarray:
        return _square("state covariance", STATE_DIM, v)

    @validator("R")
    def check_measurement_cov(cls, v: np.ndarray) -> np.ndarray:
        return _square("measurement covariance", MEASUREMENT_DIM, v)

    @property
    def mean(self) -> TrackState:
        return TrackState.from_vector(self.x)

    @property
    def box(self) -> Box3D:
        return Box3D.construct(
            x=float(self.x[IX]),
            y=float(self.x[IY]),
            z=float(self.x[IZ]),
            theta=float(self.x[ITHETA]),
            w=float(self.x[IW]),
            l=float(self.x[IL]),
            h=float(self.x[IH]),
        )

    def evolve(
        self,
        x: Optional[np.ndarray] = None,
        P: Optional[np.ndarray] = None,
        R: Optional[np.ndarray] = None,
    ) -> "FilterState":
        return FilterState.construct(
            x=self.x if x is None else x,
            P=self.P if P is None else P,
            R=self.R if R is None else R,
            Q=self.Q,
        )

    class Config:
        arbitrary_types_allowed = True


class SigmaSet(BaseModel):
    points: np.ndarray
    weights: np.ndarray

    class Config:
        arbitrary_types_allowed = True
