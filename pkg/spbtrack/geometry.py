"""Oriented box overlap: 3D IoU, 3D GIoU and the height-aware MCIoU.

Boxes are yaw-only. The BEV footprint intersection and the convex hull of
two footprints are computed with shapely; the vertical extent is an
interval product.
"""
import math

from typing import NamedTuple, Optional, Sequence

import numpy as np
import shapely

from spbtrack.constants import GIOU_DENOMINATOR_FLOOR
from spbtrack.models.box import Box3D, OverlapScores

AREA_TOLERANCE = 1e-9
FAR_PAIR_SCORE = -1.0

_LOCAL_CORNERS = np.array(
    [[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]
)


class OverlapMatrices(NamedTuple):
    iou: np.ndarray
    giou: np.ndarray
    mciou: np.ndarray


def boxes_to_array(boxes: Sequence[Box3D]) -> np.ndarray:
    """(N, 7) array of [x, y, z, θ, w, l, h] rows."""
    if len(boxes) == 0:
        return np.zeros((0, 7))
    return np.array([box.as_measurement() for box in boxes])


def bev_corners(boxes: np.ndarray) -> np.ndarray:
    """Counter-clockwise footprint corners, shape (N, 4, 2)."""
    x, y, theta = boxes[:, 0], boxes[:, 1], boxes[:, 3]
    w, l = boxes[:, 4], boxes[:, 5]  # noqa: E741
    local = np.empty((len(boxes), 4, 2))
    local[:, :, 0] = _LOCAL_CORNERS[None, :, 0] * l[:, None]
    local[:, :, 1] = _LOCAL_CORNERS[None, :, 1] * w[:, None]
    c, s = np.cos(theta)[:, None], np.sin(theta)[:, None]
    corners = np.empty_like(local)
    corners[:, :, 0] = c * local[:, :, 0] - s * local[:, :, 1] + x[:, None]
    corners[:, :, 1] = s * local[:, :, 0] + c * local[:, :, 1] + y[:, None]
    return corners


def bev_polygon(box: Box3D) -> np.ndarray:
    return bev_corners(box.as_measurement()[None, :])[0]


def height_aspect_delta(
    heights_s: np.ndarray,
    areas_s: np.ndarray,
    heights_t: np.ndarray,
    areas_t: np.ndarray,
) -> np.ndarray:
    """v = 4/π (atan(h_s / Area_s) - atan(h_t / Area_t)), pairwise."""
    return (4.0 / math.pi) * (
        np.arctan(heights_s / areas_s)[:, None]
        - np.arctan(heights_t / areas_t)[None, :]
    )


def mciou_from_giou(giou: np.ndarray, v: np.ndarray) -> np.ndarray:
    """MCIoU = GIoU + v (v / (1 - GIoU) + 1); exact GIoU where v is 0."""
    denominator = np.maximum(1.0 - giou, GIOU_DENOMINATOR_FLOOR)
    alpha = np.where(v == 0.0, 0.0, v * (v / denominator + 1.0))
    return giou + alpha


def overlap_matrix(
    boxes_a: Sequence[Box3D],
    boxes_b: Sequence[Box3D],
    max_pair_distance: Optional[float] = None,
) -> OverlapMatrices:
    """IoU, GIoU and MCIoU for every (a, b) pair; ``a`` is the MCIoU source.

    Pairs whose BEV centres are farther apart than ``max_pair_distance``
    are not measured: their IoU is 0 and GIoU / MCIoU are -1.
    """
    arr_a, arr_b = boxes_to_array(boxes_a), boxes_to_array(boxes_b)
    n, m = len(arr_a), len(arr_b)
    iou = np.zeros((n, m))
    giou = np.full((n, m), FAR_PAIR_SCORE)
    mciou = np.full((n, m), FAR_PAIR_SCORE)
    if n == 0 or m == 0:
        return OverlapMatrices(iou, giou, mciou)

    if max_pair_distance is None:
        ia, ib = np.divmod(np.arange(n * m), m)
    else:
        deltas = arr_a[:, None, :2] - arr_b[None, :, :2]
        near = np.hypot(deltas[..., 0], deltas[..., 1]) <= max_pair_distance
        ia, ib = np.nonzero(near)
    if len(ia) == 0:
        return OverlapMatrices(iou, giou, mciou)

    corners_a, corners_b = bev_corners(arr_a), bev_corners(arr_b)

    # Footprints can only touch when their circumscribed circles do.
    radius_a = np.hypot(arr_a[:, 4], arr_a[:, 5]) / 2.0
    radius_b = np.hypot(arr_b[:, 4], arr_b[:, 5]) / 2.0
    centre_gap = np.hypot(
        arr_a[ia, 0] - arr_b[ib, 0], arr_a[ia, 1] - arr_b[ib, 1]
    )
    touching = centre_gap <= radius_a[ia] + radius_b[ib]
    inter_area = np.zeros(len(ia))
    if np.any(touching):
        polys_a = shapely.polygons(corners_a)
        polys_b = shapely.polygons(corners_b)
        inter_area[touching] = shapely.area(
            shapely.intersection(
                polys_a[ia[touching]], polys_b[ib[touching]]
            )
        )
    inter_area = np.where(inter_area < AREA_TOLERANCE, 0.0, inter_area)
    hull_points = shapely.points(
        np.concatenate([corners_a[ia], corners_b[ib]], axis=1)
    )
    hull_area = shapely.area(
        shapely.convex_hull(shapely.multipoints(hull_points))
    )

    bottom_a = arr_a[ia, 2] - arr_a[ia, 6] / 2.0
    top_a = arr_a[ia, 2] + arr_a[ia, 6] / 2.0
    bottom_b = arr_b[ib, 2] - arr_b[ib, 6] / 2.0
    top_b = arr_b[ib, 2] + arr_b[ib, 6] / 2.0
    overlap_h = np.maximum(
        0.0, np.minimum(top_a, top_b) - np.maximum(bottom_a, bottom_b)
    )
    span_h = np.maximum(top_a, top_b) - np.minimum(bottom_a, bottom_b)

    vol_a = arr_a[ia, 4] * arr_a[ia, 5] * arr_a[ia, 6]
    vol_b = arr_b[ib, 4] * arr_b[ib, 5] * arr_b[ib, 6]
    vol_inter = inter_area * overlap_h
    vol_union = vol_a + vol_b - vol_inter
    vol_enclosure = np.maximum(hull_area * span_h, vol_union)

    pair_iou = np.clip(vol_inter / vol_union, 0.0, 1.0)
    pair_giou = pair_iou - (vol_enclosure - vol_union) / vol_enclosure
    identical = np.all(arr_a[ia] == arr_b[ib], axis=1)
    pair_iou[identical] = 1.0
    pair_giou[identical] = 1.0
    iou[ia, ib] = pair_iou
    giou[ia, ib] = np.minimum(pair_giou, pair_iou)

    v = height_aspect_delta(
        arr_a[:, 6],
        arr_a[:, 4] * arr_a[:, 5],
        arr_b[:, 6],
        arr_b[:, 4] * arr_b[:, 5],
    )
    mciou[ia, ib] = mciou_from_giou(giou[ia, ib], v[ia, ib])
    return OverlapMatrices(iou, giou, mciou)


def overlap_scores(a: Box3D, b: Box3D) -> OverlapScores:
    matrices = overlap_matrix([a], [b])
    return OverlapScores(
        iou3d=float(matrices.iou[0, 0]),
        giou3d=float(matrices.giou[0, 0]),
        mciou=float(matrices.mciou[0, 0]),
    )


def iou3d(a: Box3D, b: Box3D) -> float:
    return float(overlap_matrix([a], [b]).iou[0, 0])


def giou3d(a: Box3D, b: Box3D) -> float:
    return float(overlap_matrix([a], [b]).giou[0, 0])


def mciou(a: Box3D, b: Box3D) -> float:
    """MCIoU with ``a`` as the source and ``b`` as the target box."""
    return float(overlap_matrix([a], [b]).mciou[0, 0])
