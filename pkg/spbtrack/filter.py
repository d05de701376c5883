"""Motion prediction and measurement update for tracklet states.

Three variants share one state layout and one motion model:

* ``kf``   - linear Kalman filter (filterpy), fixed measurement covariance;
* ``ukf``  - unscented Kalman filter with Julier sigma points, fixed R;
* ``dukf`` - the unscented filter whose measurement covariance is adapted
  every update from the innovation and the detection confidence.
"""
import logging

from functools import lru_cache
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from filterpy.kalman import KalmanFilter
from scipy import linalg

from spbtrack.constants import (
    CONFIDENCE_FLOOR,
    IAX,
    IAY,
    IH,
    ITHETA,
    IVX,
    IVY,
    IW,
    IX,
    IY,
    MEASURED_STATES,
    MEASUREMENT_DIM,
    MIN_DIMENSION,
    R_INFLATION_CAP,
    SPD_EPSILON,
    STATE_DIM,
    FilterVariant,
)
from spbtrack.exceptions import CholeskyFailureError, NonFiniteInputError
from spbtrack.helpers import (
    bound_covariance,
    project_spd,
    symmetrize,
    wrap_angle,
    wrap_angles,
)
from spbtrack.models.box import Box3D
from spbtrack.models.config import FilterConfig
from spbtrack.models.state import FilterState, SigmaSet, TrackState

logger = logging.getLogger(__name__)

THETA_MEASUREMENT = MEASURED_STATES.index(ITHETA)

MEASUREMENT_MATRIX = np.zeros((MEASUREMENT_DIM, STATE_DIM))
MEASUREMENT_MATRIX[np.arange(MEASUREMENT_DIM), MEASURED_STATES] = 1.0


@lru_cache(maxsize=32)
def _transition(dt: float) -> np.ndarray:
    F = np.eye(STATE_DIM)
    F[IX, IVX] = F[IY, IVY] = dt
    F[IX, IAX] = F[IY, IAY] = 0.5 * dt * dt
    F[IVX, IAX] = F[IVY, IAY] = dt
    F.flags.writeable = False
    return F


def transition_matrix(dt: float) -> np.ndarray:
    """Matrix form of the constant-acceleration motion model."""
    return _transition(float(dt))


def motion_model(points: np.ndarray, dt: float) -> np.ndarray:
    """Propagate state rows through the planar constant-acceleration model.

    z, θ, the accelerations and the box dimensions are held constant.
    """
    out = np.array(points, dtype=float, copy=True)
    half_dt2 = 0.5 * dt * dt
    out[..., IX] += points[..., IVX] * dt + points[..., IAX] * half_dt2
    out[..., IY] += points[..., IVY] * dt + points[..., IAY] * half_dt2
    out[..., IVX] += points[..., IAX] * dt
    out[..., IVY] += points[..., IAY] * dt
    return out


def measurement_model(points: np.ndarray) -> np.ndarray:
    return points[..., MEASURED_STATES]


def matrix_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Factor ``S`` with ``S @ S.T == matrix``.

    Cholesky when the matrix is positive definite; singular PSD matrices
    (for example a zero covariance) fall back to an eigen factor.
    """
    try:
        return linalg.cholesky(matrix, lower=True)
    except linalg.LinAlgError:
        logger.debug("Cholesky failed, using an eigen factor instead")
    eigenvalues, eigenvectors = np.linalg.eigh(symmetrize(matrix))
    if eigenvalues.min() + SPD_EPSILON <= 0.0:
        raise CholeskyFailureError(
            "covariance is not positive semi-definite "
            f"(smallest eigenvalue {eigenvalues.min():.3e})"
        )
    return eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))


def _sigma_weights(n: int, kappa: float) -> np.ndarray:
    weights = np.full(2 * n + 1, 1.0 / (2.0 * (n + kappa)))
    weights[0] = kappa / (n + kappa)
    return weights


def _sigma_stack(
    means: np.ndarray, covariances: np.ndarray, kappa: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Julier sigma points for N states at once, shape (N, 2n+1, n)."""
    count, n = means.shape
    scaled = (n + kappa) * covariances
    try:
        roots = np.linalg.cholesky(scaled)
    except np.linalg.LinAlgError:
        roots = np.stack([matrix_sqrt(matrix) for matrix in scaled])
    offsets = np.swapaxes(roots, -1, -2)
    points = np.empty((count, 2 * n + 1, n))
    points[:, 0] = means
    points[:, 1 : n + 1] = means[:, None, :] + offsets
    points[:, n + 1 :] = means[:, None, :] - offsets
    return points, _sigma_weights(n, kappa)


def sigma_points(
    mean: Union[TrackState, np.ndarray], P: np.ndarray, kappa: float = 0.0
) -> SigmaSet:
    x = mean.to_vector() if isinstance(mean, TrackState) else mean
    x = np.asarray(x, dtype=float)
    points, weights = _sigma_stack(x[None, :], np.asarray(P)[None], kappa)
    return SigmaSet.construct(points=points[0], weights=weights)


def unscented_transform(
    points: np.ndarray,
    weights: np.ndarray,
    noise: Union[np.ndarray, float],
    mean: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Weighted mean and covariance of transformed sigma points plus noise.

    Leading axes of ``points`` are batch axes.
    """
    if mean is None:
        mean = np.einsum("k,...ki->...i", weights, points)
    deviations = points - mean[..., None, :]
    covariance = (
        np.einsum("...ki,k,...kj->...ij", deviations, weights, deviations)
        + noise
    )
    return mean, symmetrize(covariance)


def _finish(x: np.ndarray) -> np.ndarray:
    x[..., ITHETA] = wrap_angles(x[..., ITHETA])
    x[..., IW : IH + 1] = np.maximum(x[..., IW : IH + 1], MIN_DIMENSION)
    return x


def _check_measurement(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != (MEASUREMENT_DIM,):
        raise NonFiniteInputError(
            f"measurement must have {MEASUREMENT_DIM} entries"
        )
    if not np.all(np.isfinite(z)):
        raise NonFiniteInputError(f"measurement is not finite: {z}")
    return z


def init_state(box: Box3D, cfg: FilterConfig) -> FilterState:
    return FilterState(
        x=TrackState.from_box(box).to_vector(),
        P=cfg.P_init,
        R=cfg.R_init,
        Q=cfg.Q,
    )


def _ukf_predict(
    states: Sequence[FilterState],
    cfg: FilterConfig,
    dt: float,
    grow_covariance: Sequence[bool],
) -> List[FilterState]:
    means = np.stack([fs.x for fs in states])
    points, weights = _sigma_stack(
        means, np.stack([fs.P for fs in states]), cfg.kappa
    )
    x, P = unscented_transform(
        motion_model(points, dt), weights, np.stack([fs.Q for fs in states])
    )
    x = _finish(x)
    return [
        fs.evolve(x=x[i], P=P[i] if grow else fs.P)
        for i, (fs, grow) in enumerate(zip(states, grow_covariance))
    ]


def predict(
    fs: FilterState,
    cfg: FilterConfig,
    dt: Optional[float] = None,
    grow_covariance: bool = True,
) -> FilterState:
    """Unscented prediction. With ``grow_covariance`` off the mean still
    coasts but the covariance is carried over unchanged.
    """
    dt = cfg.dt if dt is None else dt
    return _ukf_predict([fs], cfg, dt, [grow_covariance])[0]


def adapt_measurement_covariance(
    R_prev: np.ndarray,
    innovation: np.ndarray,
    S: np.ndarray,
    alpha: float,
    R_init: np.ndarray,
) -> np.ndarray:
    """Running estimate (1 - α) R_{k-1} + α (ν νᵀ - S_k).

    The result is projected to SPD and its variances are held between
    R_init and ``R_INFLATION_CAP`` times R_init.
    """
    adapted = project_spd(
        (1.0 - alpha) * R_prev
        + alpha * (np.outer(innovation, innovation) - S)
    )
    floor = np.diag(R_init)
    return bound_covariance(adapted, floor, R_INFLATION_CAP * floor)


def confidence_scaled(
    R: np.ndarray, confidence: float, R_init: np.ndarray
) -> np.ndarray:
    """R / max(confidence, floor), capped like the running estimate."""
    scaled = R / max(confidence, CONFIDENCE_FLOOR)
    floor = np.diag(R_init)
    return bound_covariance(scaled, floor, R_INFLATION_CAP * floor)


def _ukf_update(
    states: Sequence[FilterState],
    measurements: Sequence[np.ndarray],
    confidences: Sequence[float],
    cfg: FilterConfig,
) -> List[FilterState]:
    z = np.stack([_check_measurement(m) for m in measurements])
    means = np.stack([fs.x for fs in states])
    covariances = np.stack([fs.P for fs in states])
    points, weights = _sigma_stack(means, covariances, cfg.kappa)
    gamma = measurement_model(points)
    z_hat, spread = unscented_transform(gamma, weights, 0.0)
    innovation = z - z_hat
    innovation[:, THETA_MEASUREMENT] = wrap_angles(
        innovation[:, THETA_MEASUREMENT]
    )

    running = [fs.R for fs in states]
    gain_R = running
    if cfg.variant == FilterVariant.DUKF:
        R_init = cfg.R_init
        running = [
            adapt_measurement_covariance(
                fs.R, nu, s + R_init, cfg.alpha_adapt, R_init
            )
            for fs, nu, s in zip(states, innovation, spread)
        ]
        gain_R = [
            confidence_scaled(R, c, R_init)
            for R, c in zip(running, confidences)
        ]
    S = spread + np.stack(gain_R)

    cross = np.einsum(
        "nki,k,nkj->nij",
        points - means[:, None, :],
        weights,
        gamma - z_hat[:, None, :],
    )
    # S is symmetric, so K = C S⁻¹ is the transpose of S⁻¹ Cᵀ.
    gain = np.swapaxes(
        np.linalg.solve(S, np.swapaxes(cross, -1, -2)), -1, -2
    )
    x = _finish(means + np.einsum("nij,nj->ni", gain, innovation))
    P = project_spd(
        symmetrize(covariances - gain @ S @ np.swapaxes(gain, -1, -2)),
        floor=0.0,
    )
    return [
        fs.evolve(x=x[i], P=P[i], R=running[i])
        for i, fs in enumerate(states)
    ]


def update(
    fs: FilterState,
    z: np.ndarray,
    confidence: float,
    cfg: FilterConfig,
) -> FilterState:
    """Unscented measurement update; adapts R first for the ``dukf`` variant.

    The innovation spread S_k uses the initial measurement covariance. The
    state keeps the confidence-free running R; the gain divides it by the
    detection confidence.
    """
    return _ukf_update([fs], [z], [confidence], cfg)[0]


def _kalman(fs: FilterState, dt: float) -> KalmanFilter:
    kf = KalmanFilter(dim_x=STATE_DIM, dim_z=MEASUREMENT_DIM)
    kf.x = fs.x.copy()
    kf.P = fs.P.copy()
    kf.Q = fs.Q
    kf.R = fs.R
    kf.F = transition_matrix(dt)
    kf.H = MEASUREMENT_MATRIX
    return kf


def kf_predict(
    fs: FilterState,
    cfg: FilterConfig,
    dt: Optional[float] = None,
    grow_covariance: bool = True,
) -> FilterState:
    kf = _kalman(fs, cfg.dt if dt is None else dt)
    kf.predict()
    x = _finish(np.asarray(kf.x, dtype=float))
    return fs.evolve(x=x, P=symmetrize(kf.P) if grow_covariance else fs.P)


def kf_update(
    fs: FilterState, z: np.ndarray, cfg: FilterConfig
) -> FilterState:
    z = _check_measurement(z).copy()
    # Move the measured yaw next to the prior so the residual is wrapped.
    prior_theta = fs.x[ITHETA]
    z[THETA_MEASUREMENT] = prior_theta + wrap_angle(
        float(z[THETA_MEASUREMENT] - prior_theta)
    )
    kf = _kalman(fs, cfg.dt)
    kf.update(z)
    x = _finish(np.asarray(kf.x, dtype=float))
    return fs.evolve(x=x, P=symmetrize(kf.P))


def baseline_kf_step(
    fs: FilterState,
    z: Optional[np.ndarray],
    cfg: FilterConfig,
    dt: Optional[float] = None,
) -> FilterState:
    """One predict + update cycle of the linear KF; ``z=None`` coasts."""
    fs = kf_predict(fs, cfg, dt)
    if z is None:
        return fs
    return kf_update(fs, z, cfg)


def predict_step(
    fs: FilterState,
    cfg: FilterConfig,
    dt: Optional[float] = None,
    grow_covariance: bool = True,
) -> FilterState:
    if cfg.variant == FilterVariant.KF:
        return kf_predict(fs, cfg, dt, grow_covariance)
    return predict(fs, cfg, dt, grow_covariance)


def update_step(
    fs: FilterState, z: np.ndarray, confidence: float, cfg: FilterConfig
) -> FilterState:
    if cfg.variant == FilterVariant.KF:
        return kf_update(fs, z, cfg)
    return update(fs, z, confidence, cfg)


def predict_many(
    states: Sequence[FilterState],
    cfg: FilterConfig,
    dt: Optional[float] = None,
    grow_covariance: Optional[Sequence[bool]] = None,
) -> List[FilterState]:
    """Predict every state of a pool in one pass."""
    if len(states) == 0:
        return []
    dt = cfg.dt if dt is None else dt
    grow = (
        [True] * len(states) if grow_covariance is None else grow_covariance
    )
    if cfg.variant == FilterVariant.KF:
        return [kf_predict(fs, cfg, dt, g) for fs, g in zip(states, grow)]
    return _ukf_predict(states, cfg, dt, grow)


def update_many(
    states: Sequence[FilterState],
    measurements: Sequence[np.ndarray],
    confidences: Sequence[float],
    cfg: FilterConfig,
) -> List[FilterState]:
    if len(states) == 0:
        return []
    if cfg.variant == FilterVariant.KF:
        return [kf_update(fs, z, cfg) for fs, z in zip(states, measurements)]
    return _ukf_update(states, measurements, confidences, cfg)
