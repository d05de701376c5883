"""Track-to-detection association.

Scores are ``ω·MCIoU + (1-ω)·FS`` where both sides carry an embedding and
plain MCIoU otherwise. Detections are matched in two confidence stages;
pairs that failed the geometric gate can still be paired by a greedy
feature-similarity rescue.
"""
import logging

from typing import List, NamedTuple, Optional, Protocol, Sequence, Tuple

import numpy as np

from scipy.optimize import linear_sum_assignment

from spbtrack import geometry
from spbtrack.constants import AssociationMetric
from spbtrack.exceptions import DimensionMismatchError
from spbtrack.models.assoc import AssocResult
from spbtrack.models.box import Box3D
from spbtrack.models.config import AssocConfig
from spbtrack.models.detection import Detection3D

logger = logging.getLogger(__name__)

INFEASIBLE = -1e6


class Trackable(Protocol):
    @property
    def box(self) -> Box3D:
        ...

    @property
    def feature(self) -> Optional[np.ndarray]:
        ...


class ScoreMatrices(NamedTuple):
    geometric: np.ndarray
    similarity: np.ndarray
    combined: np.ndarray


def feature_similarity(f_s: np.ndarray, f_t: np.ndarray) -> float:
    """exp(cos(f_s, f_t)), in [1/e, e]."""
    f_s, f_t = np.asarray(f_s, dtype=float), np.asarray(f_t, dtype=float)
    if f_s.shape != f_t.shape:
        raise DimensionMismatchError(
            f"feature lengths differ: {f_s.shape} vs {f_t.shape}"
        )
    cosine = np.dot(f_s, f_t) / (np.linalg.norm(f_s) * np.linalg.norm(f_t))
    return float(np.exp(np.clip(cosine, -1.0, 1.0)))


def similarity_matrix(
    features_s: Sequence[Optional[np.ndarray]],
    features_t: Sequence[Optional[np.ndarray]],
) -> np.ndarray:
    """Pairwise feature similarity; NaN where either side has no feature."""
    out = np.full((len(features_s), len(features_t)), np.nan)
    rows = [i for i, f in enumerate(features_s) if f is not None]
    cols = [j for j, f in enumerate(features_t) if f is not None]
    if not rows or not cols:
        return out
    a = np.stack([features_s[i] for i in rows])  # type: ignore[misc]
    b = np.stack([features_t[j] for j in cols])  # type: ignore[misc]
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatchError(
            f"feature lengths differ: {a.shape[1]} vs {b.shape[1]}"
        )
    a = a / np.linalg.norm(a, axis=1, keepdims=True)
    b = b / np.linalg.norm(b, axis=1, keepdims=True)
    out[np.ix_(rows, cols)] = np.exp(np.clip(a @ b.T, -1.0, 1.0))
    return out


def _geometric(
    matrices: geometry.OverlapMatrices, metric: AssociationMetric
) -> np.ndarray:
    if metric == AssociationMetric.GIOU:
        return matrices.giou
    return matrices.mciou


def pair_score(
    track_box: Box3D,
    det_box: Box3D,
    track_feat: Optional[np.ndarray],
    det_feat: Optional[np.ndarray],
    cfg: AssocConfig,
) -> float:
    overlap = geometry.overlap_matrix([track_box], [det_box])
    geometric = float(_geometric(overlap, cfg.metric)[0, 0])
    if (
        cfg.metric != AssociationMetric.MCIOU_FS
        or track_feat is None
        or det_feat is None
    ):
        return geometric
    return cfg.omega_assoc * geometric + (
        1.0 - cfg.omega_assoc
    ) * feature_similarity(track_feat, det_feat)


def score_matrices(
    tracks: Sequence[Trackable],
    detections: Sequence[Detection3D],
    cfg: AssocConfig,
    max_pair_distance: Optional[float] = None,
) -> ScoreMatrices:
    overlap = geometry.overlap_matrix(
        [t.box for t in tracks],
        [d.box for d in detections],
        max_pair_distance,
    )
    geometric = _geometric(overlap, cfg.metric)
    similarity = similarity_matrix(
        [t.feature for t in tracks], [d.feature for d in detections]
    )
    if cfg.metric != AssociationMetric.MCIOU_FS:
        return ScoreMatrices(geometric, similarity, geometric)
    combined = np.where(
        np.isnan(similarity),
        geometric,
        cfg.omega_assoc * geometric + (1.0 - cfg.omega_assoc) * similarity,
    )
    return ScoreMatrices(geometric, similarity, combined)


def solve_assignment(score_matrix: np.ndarray, gate: float) -> AssocResult:
    """Maximum-total-score one-to-one assignment; pairs below ``gate`` are
    returned as unmatched.
    """
    score_matrix = np.asarray(score_matrix, dtype=float)
    n_tracks, n_dets = score_matrix.shape
    matches: List[Tuple[int, int]] = []
    if n_tracks and n_dets:
        rows, cols = linear_sum_assignment(score_matrix, maximize=True)
        matches = [
            (int(r), int(c))
            for r, c in zip(rows, cols)
            if score_matrix[r, c] >= gate
        ]
    matched_tracks = {t for t, _ in matches}
    matched_dets = {d for _, d in matches}
    return AssocResult(
        matches=sorted(matches),
        unmatched_tracks=[
            t for t in range(n_tracks) if t not in matched_tracks
        ],
        unmatched_detections=[
            d for d in range(n_dets) if d not in matched_dets
        ],
    )


def _gated_stage(
    gated: np.ndarray, track_idx: List[int], det_idx: List[int]
) -> List[Tuple[int, int]]:
    if not track_idx or not det_idx:
        return []
    result = solve_assignment(
        gated[np.ix_(track_idx, det_idx)], gate=INFEASIBLE / 2.0
    )
    return [(track_idx[t], det_idx[d]) for t, d in result.matches]


def _rescue(
    matrices: ScoreMatrices,
    valid: np.ndarray,
    track_idx: List[int],
    det_idx: List[int],
    fs_gate: float,
) -> List[Tuple[int, int]]:
    candidates = [
        (-matrices.similarity[t, d], t, d)
        for t in track_idx
        for d in det_idx
        if not valid[t, d]
        and not np.isnan(matrices.similarity[t, d])
        and matrices.similarity[t, d] >= fs_gate
    ]
    candidates.sort()
    used_tracks, used_dets = set(), set()
    rescued = []
    for _, t, d in candidates:
        if t in used_tracks or d in used_dets:
            continue
        used_tracks.add(t)
        used_dets.add(d)
        rescued.append((t, d))
    return rescued


def two_stage_associate(
    tracks: Sequence[Trackable],
    detections: Sequence[Detection3D],
    cfg: AssocConfig,
    high_conf_split: Optional[float] = None,
    max_pair_distance: Optional[float] = None,
) -> AssocResult:
    """Stage 1 matches confident detections to every track, stage 2 the
    remaining detections to the remaining tracks, then the FS rescue pairs
    leftovers whose geometry failed the gate.
    """
    split = high_conf_split
    if split is None:
        split = cfg.high_conf_split or 0.0

    matrices = score_matrices(tracks, detections, cfg, max_pair_distance)
    valid = matrices.geometric >= cfg.mciou_gate
    gated = np.where(valid, matrices.combined, INFEASIBLE)

    all_tracks = list(range(len(tracks)))
    high = [j for j, d in enumerate(detections) if d.confidence >= split]
    low = [j for j, d in enumerate(detections) if d.confidence < split]

    matches = _gated_stage(gated, all_tracks, high)
    taken = {t for t, _ in matches}
    matches += _gated_stage(
        gated, [t for t in all_tracks if t not in taken], low
    )

    rescued: List[Tuple[int, int]] = []
    if cfg.metric == AssociationMetric.MCIOU_FS:
        taken_tracks = {t for t, _ in matches}
        taken_dets = {d for _, d in matches}
        rescued = _rescue(
            matrices,
            valid,
            [t for t in all_tracks if t not in taken_tracks],
            [d for d in range(len(detections)) if d not in taken_dets],
            cfg.fs_gate,
        )
        if rescued:
            logger.debug("feature similarity rescued %d pairs", len(rescued))
    matches = sorted(matches + rescued)

    matched_tracks = {t for t, _ in matches}
    matched_dets = {d for _, d in matches}
    return AssocResult(
        matches=matches,
        unmatched_tracks=[t for t in all_tracks if t not in matched_tracks],
        unmatched_detections=[
            d for d in range(len(detections)) if d not in matched_dets
        ],
        rescued=sorted(rescued),
    )
