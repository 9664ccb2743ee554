"""
Haar features and integral images
=================================

A tour of the feature machinery: how big the feature space is, how a
feature reads off an integral image in constant time, and why constant
regions always score zero.
"""

import numpy as np

from gadaboost import (
    HaarFeature,
    HaarType,
    canonical_id,
    compute_integral,
    enumerate_features,
    eval_feature,
    feature_space_size,
)

rng = np.random.default_rng(0)

###############################################################################
# The feature space. Five upright rectangle types at every position and
# every legal size add up quickly: the classic 24x24 training window has
# over 162,000 features.

for w, h in [(6, 6), (19, 19), (24, 24)]:
    print(f"{w:2d}x{h:<2d} window: {feature_space_size(w, h):7d} features")

feats = enumerate_features(24, 24)
per_type = {t.name: sum(1 for f in feats if f.htype == t) for t in HaarType}
print("\nby type on 24x24:")
for name, count in per_type.items():
    print(f"  {name:10s} {count:6d}")

###############################################################################
# Evaluating a feature is four table lookups per rectangle. Build an
# image with a bright left half and ask the two-rectangle horizontal
# feature about it: the value is (left sum) - (right sum).

img = np.zeros((4, 4), dtype=np.int64)
img[:, :2] = 255
ii = compute_integral(img)
probe = HaarFeature(0, 0, 4, 4, HaarType.HAAR_X2)
print(f"\nleft-bright 4x4, HAAR_X2 over the window: {eval_feature(ii, probe)}")
print(f"same feature on the negated image:        {eval_feature(compute_integral(-img), probe)}")

###############################################################################
# The compensation weights (outer thirds +1 / middle -2, checkerboard
# +1/-1) make every feature blind to flat regions: a constant image
# scores exactly zero for all 162,336 features.

flat = compute_integral(np.full((24, 24), 77, dtype=np.int64))
sample = [feats[i] for i in rng.choice(len(feats), size=500, replace=False)]
print(f"\nmax |value| over 500 random features on a constant image: "
      f"{max(abs(eval_feature(flat, f)) for f in sample)}")

###############################################################################
# Every feature has a stable integer id, which is what the genetic
# search uses to mark features as consumed and what tie-breaking in the
# boosting loop keys on.

ids = [canonical_id(f, 24, 24) for f in sample]
print(f"500 random features -> {len(set(ids))} distinct ids")
