"""Detection scoring: overlap matching, ROC sweeps, multi-run envelopes.

A detection counts as correct when the intersection-over-union of its
box with a ground-truth box exceeds 0.4. Matching is greedy in
descending score and one-to-one per ground truth. Boxes are
``(x, y, width, height)`` tuples in image pixels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

PASCAL_IOU = 0.4

Box = Tuple[float, float, float, float]


@dataclass(frozen=True)
class GroundTruthBox:
    image: str
    box: Box


@dataclass(frozen=True)
class RocPoint:
    false_positive_count: int
    true_positive_rate: float
    score_threshold: float


def iou(a: Sequence[float], b: Sequence[float]) -> float:
    """Intersection area over union area of two (x, y, w, h) boxes."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    if aw <= 0 or ah <= 0 or bw <= 0 or bh <= 0:
        raise ValueError("boxes must have positive area")
    ix = max(ax, bx)
    iy = max(ay, by)
    ix1 = min(ax + aw, bx + bw)
    iy1 = min(ay + ah, by + bh)
    inter = max(0.0, ix1 - ix) * max(0.0, iy1 - iy)
    union = aw * ah + bw * bh - inter
    return float(inter / union)


def match_detections(det_boxes: Sequence[Box], det_scores: Sequence[float],
                     gt_boxes: Sequence[Box], iou_threshold: float = PASCAL_IOU,
                     ) -> Tuple[int, int, List[Tuple[int, int]]]:
    """Greedy one-to-one matching for a single image.

    Detections are visited in descending score (ties resolved by box
    coordinates so the result is independent of input order); each one
    claims the unmatched ground truth of highest IoU if that IoU
    exceeds the threshold, otherwise it is a false positive.

    Returns (tp, fp, matched (det_index, gt_index) pairs).
    """
    order = sorted(range(len(det_boxes)),
                   key=lambda i: (-float(det_scores[i]), tuple(det_boxes[i])))
    taken = [False] * len(gt_boxes)
    matches: List[Tuple[int, int]] = []
    fp = 0
    for i in order:
        best_j = -1
        best_iou = 0.0
        for j, g in enumerate(gt_boxes):
            if taken[j]:
                continue
            v = iou(det_boxes[i], g)
            if v > best_iou:
                best_iou = v
                best_j = j
        if best_j >= 0 and best_iou > iou_threshold:
            taken[best_j] = True
            matches.append((i, best_j))
        else:
            fp += 1
    return len(matches), fp, matches


def roc_points(detections: Mapping[str, Sequence[Tuple[Box, float]]],
               ground_truths: Mapping[str, Sequence[Box]],
               iou_threshold: float = PASCAL_IOU) -> List[RocPoint]:
    """Sweep the score threshold and report (fp count, tp rate) points.

    False positives are counted corpus-wide. For every distinct fp
    count the point with the highest rate (the lowest threshold before
    fp grows) is kept. Greedy matching in global descending-score order
    makes each lower threshold a superset of the matches above it, so
    one full matching pass suffices.
    """
    total_gt = sum(len(v) for v in ground_truths.values())
    if total_gt == 0:
        raise ValueError("no ground truth boxes")

    flags: List[Tuple[float, bool]] = []  # (score, is_tp)
    for image, dets in detections.items():
        boxes = [d[0] for d in dets]
        scores = [d[1] for d in dets]
        gts = list(ground_truths.get(image, ()))
        _, _, matches = match_detections(boxes, scores, gts, iou_threshold)
        matched = {i for i, _ in matches}
        flags.extend((scores[i], i in matched) for i in range(len(dets)))

    flags.sort(key=lambda t: -t[0])
    points: Dict[int, RocPoint] = {}
    tp = fp = 0
    k = 0
    while k < len(flags):
        threshold = flags[k][0]
        while k < len(flags) and flags[k][0] == threshold:
            if flags[k][1]:
                tp += 1
            else:
                fp += 1
            k += 1
        points[fp] = RocPoint(fp, tp / total_gt, threshold)
    return [points[c] for c in sorted(points)]


def aggregate_runs(run_curves: Sequence[Sequence[RocPoint]],
                   fp_grid: Sequence[int]) -> List[Tuple[int, float, float, float]]:
    """Min/mean/max true-positive rate of several runs on an fp grid.

    Each run's curve is step-interpolated (last rate carried forward;
    0.0 before its first point). Returns (fp, min, mean, max) rows.
    """
    if len(run_curves) == 0:
        raise ValueError("need at least one run")
    if len(fp_grid) == 0:
        raise ValueError("empty fp grid")

    rows = []
    for g in fp_grid:
        rates = []
        for curve in run_curves:
            rate = 0.0
            for p in sorted(curve, key=lambda p: p.false_positive_count):
                if p.false_positive_count <= g:
                    rate = p.true_positive_rate
                else:
                    break
            rates.append(rate)
        arr = np.asarray(rates)
        rows.append((int(g), float(arr.min()), float(arr.mean()), float(arr.max())))
    return rows
