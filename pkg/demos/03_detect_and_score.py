"""
Detection and overlap-based scoring
===================================

Train a small cascade, sweep it over synthetic scenes with planted
faces, group the raw windows, and score the result with the
intersection-over-union criterion: a detection counts when IoU with a
ground-truth box exceeds 0.4. Ends with a threshold sweep (the ROC
curve) and a three-run min/mean/max envelope.
"""

import os

import numpy as np

from gadaboost import GaConfig, StageGoal, TrainConfig, train_cascade
from gadaboost.detect import detect, group_detections
from gadaboost.evaluate import aggregate_runs, iou, match_detections, roc_points
from gadaboost.imgio import normalize_window
from gadaboost.synthetic import scene, training_pools

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

WINDOW = 13
NOISE = 35.0

###############################################################################
# Corpus and held-out scenes. Scenes are negative texture with faces
# planted at known, non-overlapping boxes -- the ground truth.

data_rng = np.random.default_rng(3)
pos_raw, neg_images = training_pools(
    data_rng, n_pos=260, n_neg_images=14,
    window_w=WINDOW, window_h=WINDOW, noise=NOISE, neg_size=100,
)
positives = [normalize_window(p) for p in pos_raw]
scenes = [scene(data_rng, 90, 90, face_sizes=[13, 16, 20], window=WINDOW,
                noise=NOISE) for _ in range(10)]
gts = {f"scene{i}": list(boxes) for i, (_, boxes) in enumerate(scenes)}
print(f"{len(scenes)} held-out scenes, "
      f"{sum(len(b) for b in gts.values())} planted faces")


def train_and_score(seed):
    cfg = TrainConfig(
        window_w=WINDOW, window_h=WINDOW, num_stages=3,
        pos_per_stage=120, neg_per_stage=120,
        stage_goal=StageGoal(0.95, 0.4, 10),
        mode="ga", ga=GaConfig(population_size=250, max_iterations=6),
        rng_seed=seed,
    )
    cascade, _ = train_cascade(positives, neg_images, cfg)
    dets = {}
    for i, (img, _) in enumerate(scenes):
        raw = detect(img, cascade, scale_factor=1.25, step=2)
        dets[f"scene{i}"] = [(d.box, d.score)
                             for d in group_detections(raw, min_neighbors=1)]
    return dets


###############################################################################
# One run in detail: match detections to ground truth per scene and
# count hits and false alarms at full sensitivity.

dets = train_and_score(seed=1)
tp = fp = 0
for name, rows in dets.items():
    tpi, fpi, _ = match_detections([b for b, _ in rows], [s for _, s in rows],
                                   gts[name])
    tp += tpi
    fp += fpi
total_gt = sum(len(b) for b in gts.values())
print(f"\nseed 1: {tp}/{total_gt} faces found, {fp} false positives "
      f"(no score threshold)")

###############################################################################
# The ROC curve: sweep the detection-score threshold from strict to
# permissive and record (false positives, true-positive rate) points.

curve = roc_points(dets, gts)
roc_path = os.path.join(OUT, "roc_seed1.csv")
with open(roc_path, "w") as fh:
    fh.write("threshold,false_positives,true_positive_rate\n")
    for p in curve:
        fh.write(f"{p.score_threshold!r},{p.false_positive_count},"
                 f"{p.true_positive_rate!r}\n")
print(f"ROC ({len(curve)} points) written to {roc_path}")
for p in curve[:: max(1, len(curve) // 5)]:
    print(f"  fp {p.false_positive_count:4d}  tpr {p.true_positive_rate:.2f}"
          f"  (threshold {p.score_threshold:.3f})")

###############################################################################
# Multiple runs give an accuracy band: min, mean and max true-positive
# rate per false-positive level across three seeds.

curves = [curve] + [roc_points(train_and_score(seed), gts) for seed in (2, 3)]
grid = sorted({p.false_positive_count for c in curves for p in c})
rows = aggregate_runs(curves, grid)
agg_path = os.path.join(OUT, "roc_envelope.csv")
with open(agg_path, "w") as fh:
    fh.write("fp,min_tpr,mean_tpr,max_tpr\n")
    for fp_count, lo, mean, hi in rows:
        fh.write(f"{fp_count},{lo!r},{mean!r},{hi!r}\n")
print(f"\nthree-run envelope written to {agg_path}")
mid = rows[len(rows) // 2]
print(f"mid-curve point: fp {mid[0]}, tpr min {mid[1]:.2f} "
      f"mean {mid[2]:.2f} max {mid[3]:.2f}")
