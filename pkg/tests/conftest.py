import numpy as np
import pytest

from gadaboost.haar import HaarFeature, HaarType, compute_integral
from gadaboost.stump import Sample


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def sample_from_value(value: float, label: int) -> Sample:
    """A 2x1 window whose HAAR_X2 (0,0,2,1) feature value equals ``value``."""
    win = np.array([[float(value), 0.0]])
    return Sample(compute_integral(win), label)


X2_PROBE = HaarFeature(0, 0, 2, 1, HaarType.HAAR_X2)


def four_sample_fixture():
    """Positives at feature values {2, 3}, negatives at {0, 1}."""
    samples = [
        sample_from_value(0.0, -1),
        sample_from_value(1.0, -1),
        sample_from_value(2.0, 1),
        sample_from_value(3.0, 1),
    ]
    return samples, X2_PROBE


def random_samples(rng, n: int, w: int = 6, h: int = 6):
    """Random float windows with both labels guaranteed present."""
    labels = rng.choice([-1, 1], size=n)
    labels[0], labels[1] = -1, 1
    return [
        Sample(compute_integral(rng.uniform(0.0, 255.0, size=(h, w))), int(lab))
        for lab in labels
    ]


# ---------------------------------------------------------------------------
# Independent oracles, kept free of the library's fitting code.
# ---------------------------------------------------------------------------


def oracle_split_error(values, labels, weights, threshold) -> float:
    """Weighted squared error of the optimal-response split at a threshold."""
    err = 0.0
    left = values < threshold
    for side in (left, ~left):
        wm = weights[side]
        if wm.sum() <= 0.0:
            continue
        mean = (wm * labels[side]).sum() / wm.sum()
        err += (wm * (labels[side] - mean) ** 2).sum()
    return float(err)


def oracle_best_quality(values, labels, weights) -> float:
    """Exhaustive scan over all midpoint thresholds; max variance reduction."""
    values = np.asarray(values, dtype=float)
    labels = np.asarray(labels, dtype=float)
    weights = np.asarray(weights, dtype=float)
    mean = (weights * labels).sum() / weights.sum()
    parent = float((weights * (labels - mean) ** 2).sum())
    v = np.sort(values)
    best = 0.0
    for i in range(len(v) - 1):
        if v[i + 1] <= v[i]:
            continue
        t = 0.5 * (v[i] + v[i + 1])
        best = max(best, parent - oracle_split_error(values, labels, weights, t))
    return best


def oracle_iou(a, b) -> float:
    """Direct rectangle intersection/union on (x, y, w, h) boxes."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    iw = min(ax + aw, bx + bw) - max(ax, bx)
    ih = min(ay + ah, by + bh) - max(ay, by)
    inter = max(iw, 0) * max(ih, 0)
    return inter / (aw * ah + bw * bh - inter)
