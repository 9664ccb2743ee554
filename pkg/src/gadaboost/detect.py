"""Multi-scale sliding-window detection with a trained cascade.

Windows are scanned on a stride that grows with the scale; each window
is variance-compensated through the squared-sum table and scored stage
by stage, so most positions die in the first stage. Whole scales are
evaluated as array operations over all surviving window origins at
once, which is arithmetic-identical to scoring windows one at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .cascade import Cascade, _ri, scale_stage_plan, stage_scores_at
from .evaluate import PASCAL_IOU, iou
from .haar import compute_integral


@dataclass(frozen=True)
class Detection:
    """An accepted window in image pixels."""

    box: Tuple[int, int, int, int]  # x, y, width, height
    score: float                    # final stage margin
    scale: float


def detect(img: np.ndarray, cascade: Cascade, scale_factor: float = 1.25,
           step: int = 2) -> List[Detection]:
    """All accepted windows over scales 1, s, s^2, ... while they fit.

    Images smaller than the training window yield an empty list. The
    result is sorted by (y, x, scale).
    """
    if scale_factor <= 1.0:
        raise ValueError("scale_factor must be > 1")
    img = np.asarray(img)
    img_h, img_w = img.shape
    base_w, base_h = cascade.window_w, cascade.window_h
    if img_w < base_w or img_h < base_h:
        return []

    ii = compute_integral(img)
    sums = ii.sums.astype(np.float64, copy=False)
    sq = ii.squared_sums.astype(np.float64, copy=False)

    out: List[Detection] = []
    k = 0
    while True:
        s = scale_factor ** k
        k += 1
        win_w = _ri(base_w * s)
        win_h = _ri(base_h * s)
        if win_w > img_w or win_h > img_h:
            break
        stride = max(1, _ri(step * s))
        oxs = np.arange(0, img_w - win_w + 1, stride)
        oys = np.arange(0, img_h - win_h + 1, stride)

        gy, gx = np.meshgrid(oys, oxs, indexing="ij")
        ys = gy.reshape(-1)
        xs = gx.reshape(-1)

        n = win_w * win_h
        s1 = (sums[ys + win_h, xs + win_w] - sums[ys, xs + win_w]
              - sums[ys + win_h, xs] + sums[ys, xs])
        s2 = (sq[ys + win_h, xs + win_w] - sq[ys, xs + win_w]
              - sq[ys + win_h, xs] + sq[ys, xs])
        var = s2 / n - (s1 / n) ** 2
        sd = np.sqrt(np.maximum(var, 0.0))

        # constant windows carry no rectangle-contrast evidence at all;
        # drop them rather than score a wall of zeros against thresholds
        textured = sd > 1e-12
        ys, xs, sd = ys[textured], xs[textured], sd[textured]

        margins = None
        for stage in cascade.stages:
            if ys.shape[0] == 0:
                break
            plan = scale_stage_plan(stage, s, base_w, base_h)
            score = stage_scores_at(plan, sums, ys, xs, sd)
            margins = score - plan.threshold
            alive = margins >= 0
            ys, xs, sd, margins = ys[alive], xs[alive], sd[alive], margins[alive]

        if margins is not None:
            for y, x, m in zip(ys, xs, margins):
                out.append(Detection((int(x), int(y), win_w, win_h), float(m), s))

    out.sort(key=lambda d: (d.box[1], d.box[0], d.scale))
    return out


def group_detections(dets: Sequence[Detection],
                     min_neighbors: int = 2) -> List[Detection]:
    """Merge overlapping detections by single-link clustering.

    Detections whose pairwise IoU exceeds the overlap criterion join one
    cluster; each cluster of at least ``min_neighbors`` members emits
    the member-average box with the cluster's best score.
    """
    n = len(dets)
    if n == 0:
        return []

    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if iou(dets[i].box, dets[j].box) > PASCAL_IOU:
                pi, pj = find(i), find(j)
                if pi != pj:
                    parent[pi] = pj

    clusters: dict = {}
    for i in range(n):
        clusters.setdefault(find(i), []).append(dets[i])

    out = []
    for members in clusters.values():
        if len(members) < min_neighbors:
            continue
        boxes = np.asarray([m.box for m in members], dtype=np.float64)
        mean = boxes.mean(axis=0)
        best = max(members, key=lambda m: m.score)
        out.append(Detection(
            (int(math.floor(mean[0] + 0.5)), int(math.floor(mean[1] + 0.5)),
             int(math.floor(mean[2] + 0.5)), int(math.floor(mean[3] + 0.5))),
            best.score, best.scale,
        ))
    out.sort(key=lambda d: (d.box[1], d.box[0], d.scale))
    return out
