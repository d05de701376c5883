"""CLEAR-MOT and recall-swept (s)AMOTA evaluation with 3D IoU matching.

A ground-truth box and an output box match when their 3D IoU reaches the
threshold; per frame the one-to-one matching maximises the total IoU. The
recall sweep follows the AB3DMOT KITTI evaluation: thresholds are taken
from the scores of true-positive outputs so that recall advances in steps
of 1/40, and metrics missing for unreachable recall levels count as zero.
"""
import logging
import math

from collections import defaultdict
from typing import (
    Dict,
    Iterable,
    List,
    Mapping,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
)

import numpy as np

from spbtrack.assoc import solve_assignment
from spbtrack.constants import DEFAULT_IOU_THRESHOLD, RECALL_SAMPLE_POINTS
from spbtrack.exceptions import MissingScoresError
from spbtrack.geometry import overlap_matrix
from spbtrack.helpers import safe_div
from spbtrack.models.detection import DetectionSequence, TrackedObject
from spbtrack.models.report import (
    ClearMot,
    EvalReport,
    FrameMatch,
    RecallSweep,
    SequenceMetrics,
)

logger = logging.getLogger(__name__)

SequencePair = Tuple[Sequence[TrackedObject], Sequence[TrackedObject]]


class _FrameCache(NamedTuple):
    frame: int
    gt_ids: List[int]
    pred_ids: List[int]
    scores: np.ndarray
    iou: np.ndarray


def match_indices(iou: np.ndarray, iou_thres: float) -> List[Tuple[int, int]]:
    """Max-total-IoU one-to-one pairs among entries with IoU >= iou_thres."""
    masked = np.where(iou >= iou_thres, iou, 0.0)
    return solve_assignment(masked, gate=iou_thres).matches


def match_frame(
    gt: Sequence[TrackedObject],
    preds: Sequence[TrackedObject],
    iou_thres: float = DEFAULT_IOU_THRESHOLD,
) -> FrameMatch:
    iou = overlap_matrix([g.box for g in gt], [p.box for p in preds]).iou
    pairs = match_indices(iou, iou_thres)
    frame = gt[0].frame if gt else preds[0].frame if preds else 0
    return FrameMatch(
        frame=frame,
        matches=[
            (gt[i].track_id, preds[j].track_id, float(iou[i, j]))
            for i, j in pairs
        ],
        fp=len(preds) - len(pairs),
        fn=len(gt) - len(pairs),
    )


def clear_mot(frames: Iterable[FrameMatch]) -> ClearMot:
    """CLEAR-MOT counts over the frames of one sequence, in frame order.

    An identity switch is counted when a ground-truth object is matched to
    an output id different from the one it was last matched to.
    """
    last_match: Dict[int, int] = {}
    tp = fp = fn = ids = 0
    iou_sum = 0.0
    for fm in sorted(frames, key=lambda f: f.frame):
        tp += fm.tp
        fp += fm.fp
        fn += fm.fn
        for gt_id, pred_id, iou in fm.matches:
            iou_sum += iou
            previous = last_match.get(gt_id)
            if previous is not None and previous != pred_id:
                ids += 1
            last_match[gt_id] = pred_id
    return _summarize(tp, fp, fn, ids, iou_sum)


def _summarize(
    tp: int, fp: int, fn: int, ids: int, iou_sum: float
) -> ClearMot:
    gt = tp + fn
    errors = fp + fn + ids
    if gt > 0:
        mota = 1.0 - errors / gt
    else:
        mota = 1.0 if errors == 0 else 0.0
    recall = safe_div(tp, gt)
    precision = safe_div(tp, tp + fp)
    return ClearMot(
        mota=mota,
        motp=safe_div(iou_sum, tp),
        recall=recall,
        precision=precision,
        f1=safe_div(2.0 * precision * recall, precision + recall),
        ids=ids,
        tp=tp,
        fp=fp,
        fn=fn,
        gt=gt,
    )


def _by_frame(
    objects: Iterable[TrackedObject],
) -> Dict[int, List[TrackedObject]]:
    frames: Dict[int, List[TrackedObject]] = defaultdict(list)
    for obj in objects:
        frames[obj.frame].append(obj)
    return frames


def _cache_sequence(
    gt: Sequence[TrackedObject], preds: Sequence[TrackedObject]
) -> List[_FrameCache]:
    gt_frames, pred_frames = _by_frame(gt), _by_frame(preds)
    cache = []
    for frame in sorted(set(gt_frames) | set(pred_frames)):
        g, p = gt_frames.get(frame, []), pred_frames.get(frame, [])
        scores = np.array(
            [np.nan if o.score is None else o.score for o in p], dtype=float
        )
        cache.append(
            _FrameCache(
                frame=frame,
                gt_ids=[o.track_id for o in g],
                pred_ids=[o.track_id for o in p],
                scores=scores,
                iou=overlap_matrix([o.box for o in g], [o.box for o in p]).iou,
            )
        )
    return cache


def _clear_at(
    cache: Sequence[_FrameCache],
    iou_thres: float,
    min_score: Optional[float] = None,
) -> Tuple[ClearMot, List[float]]:
    """CLEAR-MOT for outputs scoring at least ``min_score``, plus the
    scores of the true-positive outputs.
    """
    frames = []
    tp_scores: List[float] = []
    for fc in cache:
        keep = np.arange(len(fc.pred_ids))
        if min_score is not None:
            keep = keep[fc.scores >= min_score]
        pairs = match_indices(fc.iou[:, keep], iou_thres)
        frames.append(
            FrameMatch(
                frame=fc.frame,
                matches=[
                    (
                        fc.gt_ids[i],
                        fc.pred_ids[keep[j]],
                        float(fc.iou[i, keep[j]]),
                    )
                    for i, j in pairs
                ],
                fp=len(keep) - len(pairs),
                fn=len(fc.gt_ids) - len(pairs),
            )
        )
        tp_scores.extend(float(fc.scores[keep[j]]) for _, j in pairs)
    return clear_mot(frames), tp_scores


def _pool(results: Sequence[ClearMot]) -> ClearMot:
    tp = sum(r.tp for r in results)
    iou_sum = sum(r.motp * r.tp for r in results)
    return _summarize(
        tp,
        sum(r.fp for r in results),
        sum(r.fn for r in results),
        sum(r.ids for r in results),
        iou_sum,
    )


def recall_thresholds(
    scores: Sequence[float],
    num_gt: int,
    num_sample_pts: int = RECALL_SAMPLE_POINTS,
) -> Tuple[List[float], List[float]]:
    """Score thresholds and the recall level each one stands for."""
    ordered = np.sort(np.asarray(scores, dtype=float))[::-1]
    current_recall = 0.0
    thresholds: List[float] = []
    recalls: List[float] = []
    last = len(ordered) - 1
    for i, score in enumerate(ordered):
        l_recall = (i + 1) / float(num_gt)
        r_recall = (i + 2) / float(num_gt) if i < last else l_recall
        if (r_recall - current_recall) < (
            current_recall - l_recall
        ) and i < last:
            continue
        thresholds.append(float(score))
        recalls.append(current_recall)
        current_recall += 1.0 / (num_sample_pts - 1.0)
    return thresholds[1:], recalls[1:]


def _check_scores(caches: Sequence[Sequence[_FrameCache]]) -> None:
    for cache in caches:
        for fc in cache:
            if np.any(np.isnan(fc.scores)):
                raise MissingScoresError(
                    f"frame {fc.frame}: outputs without a score cannot be "
                    "swept over recall"
                )


def _sweep(
    caches: Sequence[Sequence[_FrameCache]],
    iou_thres: float,
    num_sample_pts: int = RECALL_SAMPLE_POINTS,
) -> RecallSweep:
    _check_scores(caches)
    full = [_clear_at(cache, iou_thres) for cache in caches]
    num_gt = sum(result.gt for result, _ in full)
    if num_gt == 0:
        return RecallSweep()
    tp_scores = [s for _, scores in full for s in scores]
    thresholds, recalls = recall_thresholds(
        tp_scores, num_gt, num_sample_pts
    )

    mota_sum = smota_sum = motp_sum = 0.0
    best_recall: Optional[ClearMot] = None
    best_mota: Optional[ClearMot] = None
    for threshold, recall in zip(thresholds, recalls):
        point = _pool(
            [_clear_at(cache, iou_thres, threshold)[0] for cache in caches]
        )
        errors = point.fn + point.fp + point.ids
        smota = 1.0 - (errors - (1.0 - recall) * num_gt) / (recall * num_gt)
        smota_sum += min(1.0, max(0.0, smota))
        mota_sum += point.mota
        motp_sum += point.motp
        if best_recall is None or point.recall > best_recall.recall:
            best_recall = point
        if best_mota is None or point.mota > best_mota.mota:
            best_mota = point

    points = float(num_sample_pts - 1)
    return RecallSweep(
        samota=smota_sum / points,
        amota=mota_sum / points,
        amotp=motp_sum / points,
        ids_best_recall=best_recall.ids if best_recall else 0,
        ids_best_mota=best_mota.ids if best_mota else 0,
    )


def _sweep_if_scored(
    name: str, caches: Sequence[Sequence[_FrameCache]], iou_thres: float
) -> RecallSweep:
    """Recall sweep, or NaN sweep metrics when some output has no score."""
    try:
        return _sweep(caches, iou_thres)
    except MissingScoresError as exc:
        logger.warning("%s: recall sweep skipped, %s", name, exc)
        return RecallSweep(samota=math.nan, amota=math.nan, amotp=math.nan)


def samota(
    gt: Sequence[TrackedObject],
    preds: Sequence[TrackedObject],
    iou_thres: float = DEFAULT_IOU_THRESHOLD,
) -> RecallSweep:
    """sAMOTA, AMOTA and AMOTP of one sequence."""
    return _sweep([_cache_sequence(gt, preds)], iou_thres)


def evaluate_sequence(
    name: str,
    gt: Sequence[TrackedObject],
    preds: Sequence[TrackedObject],
    iou_thres: float = DEFAULT_IOU_THRESHOLD,
) -> SequenceMetrics:
    cache = _cache_sequence(gt, preds)
    clear, _ = _clear_at(cache, iou_thres)
    return SequenceMetrics(
        sequence=name,
        clear=clear,
        sweep=_sweep_if_scored(name, [cache], iou_thres),
    )


def evaluate(
    sequences: Mapping[str, SequencePair],
    iou_thres: float = DEFAULT_IOU_THRESHOLD,
) -> EvalReport:
    """Per-sequence metrics plus an aggregate pooled over all sequences.

    The aggregate sums CLEAR-MOT counts and sweeps recall over the pooled
    true-positive scores; identity switches never span sequences.
    """
    caches = {
        name: _cache_sequence(gt, preds)
        for name, (gt, preds) in sorted(sequences.items())
    }
    per_sequence = []
    for name, cache in caches.items():
        clear, _ = _clear_at(cache, iou_thres)
        per_sequence.append(
            SequenceMetrics(
                sequence=name,
                clear=clear,
                sweep=_sweep_if_scored(name, [cache], iou_thres),
            )
        )
        logger.debug("%s: MOTA %.4f", name, clear.mota)
    aggregate = SequenceMetrics(
        sequence="all",
        clear=_pool([m.clear for m in per_sequence]),
        sweep=_sweep_if_scored("all", list(caches.values()), iou_thres),
    )
    return EvalReport(
        sequences=per_sequence, aggregate=aggregate, iou_threshold=iou_thres
    )


def label_detections(
    gt: Sequence[TrackedObject],
    detections: DetectionSequence,
    iou_thres: float = DEFAULT_IOU_THRESHOLD,
) -> Tuple[List[Tuple[float, bool]], int]:
    """(confidence, is_true_positive) per detection, and the GT count."""
    gt_frames = _by_frame(gt)
    labeled: List[Tuple[float, bool]] = []
    for frame in detections.frames:
        g = gt_frames.get(frame.frame, [])
        dets = frame.detections
        iou = overlap_matrix(
            [o.box for o in g], [d.box for d in dets]
        ).iou
        matched = {j for _, j in match_indices(iou, iou_thres)}
        labeled.extend(
            (d.confidence, j in matched) for j, d in enumerate(dets)
        )
    return labeled, len(gt)
