import math
import time

from collections import defaultdict
from contextlib import contextmanager
from typing import Dict, Iterator

import numpy as np

from spbtrack.constants import SPD_EPSILON


def wrap_angle(theta: float) -> float:
    """Wrap an angle in radians to (-π, π]."""
    wrapped = math.remainder(theta, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def wrap_angles(theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    wrapped = np.remainder(theta + np.pi, 2.0 * np.pi) - np.pi
    wrapped = np.where(wrapped <= -np.pi, wrapped + 2.0 * np.pi, wrapped)
    return np.where((theta > -np.pi) & (theta <= np.pi), theta, wrapped)


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    return (matrix + np.swapaxes(matrix, -1, -2)) / 2.0


def project_spd(matrix: np.ndarray, floor: float = SPD_EPSILON) -> np.ndarray:
    """Nearest symmetric matrix whose eigenvalues are all >= ``floor``.

    Matrices that already satisfy the floor are returned unchanged after
    symmetrisation, so repeated projection is the identity. A stack of
    matrices is projected one by one.
    """
    sym = symmetrize(matrix)
    eigenvalues, eigenvectors = np.linalg.eigh(sym)
    valid = eigenvalues.min(axis=-1) >= floor
    if np.all(valid):
        return sym
    clipped = np.clip(eigenvalues, floor, None)[..., None, :]
    rebuilt = symmetrize(
        (eigenvectors * clipped) @ np.swapaxes(eigenvectors, -1, -2)
    )
    return np.where(valid[..., None, None], sym, rebuilt)


def bound_covariance(
    matrix: np.ndarray, lower: np.ndarray, upper: np.ndarray
) -> np.ndarray:
    """Rescale rows and columns so the diagonal lies in [lower, upper].

    Correlations are kept, so an SPD input stays SPD. A diagonal already
    inside the bounds is returned untouched.
    """
    variances = np.diagonal(matrix, axis1=-2, axis2=-1)
    target = np.clip(variances, lower, upper)
    if np.array_equal(target, variances):
        return matrix
    scale = np.sqrt(
        np.divide(
            target,
            variances,
            out=np.ones_like(target),
            where=variances > 0.0,
        )
    )
    bounded = matrix * scale[..., :, None] * scale[..., None, :]
    zero = variances <= 0.0
    if np.any(zero):
        bounded = bounded + np.where(zero, target, 0.0)[..., None] * np.eye(
            variances.shape[-1]
        )
    return bounded


def safe_div(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator != 0 else 0.0


class StageTimer:
    """Accumulates wall-clock milliseconds per named pipeline stage."""

    def __init__(self) -> None:
        self.totals_ms: Dict[str, float] = defaultdict(float)

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.totals_ms[name] += (time.perf_counter() - start) * 1000.0

    def as_dict(self) -> Dict[str, float]:
        totals = sorted(self.totals_ms.items())
        return {name: round(value, 3) for name, value in totals}
