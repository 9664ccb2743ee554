"""Single-feature regression stumps on weighted samples.

A stump splits samples on one Haar feature value at one threshold and
predicts the weighted mean label on each side. Its quality is the
reduction in weighted squared error versus the no-split predictor
(weighted label variance minus best split error), so quality >= 0 and
"bigger is better" -- the same number the GA uses as fitness.

Threshold candidates are midpoints between consecutive distinct sorted
feature values; equal values never straddle a threshold. Prediction
uses ``value < threshold -> left`` so values equal to the threshold go
right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .haar import HaarFeature, IntegralImage, corner_table, eval_feature, feature_values

_TINY = 1e-300  # denominator floor; weights are normalized so real masses dwarf this


@dataclass(frozen=True)
class Sample:
    """A training window (integral form) with its ground-truth label."""

    window: IntegralImage
    label: int  # +1 face, -1 non-face

    def __post_init__(self):
        if self.label not in (-1, 1):
            raise ValueError(f"label must be +1 or -1, got {self.label}")


@dataclass(frozen=True)
class DecisionStump:
    """Threshold rule on one feature with per-side regression responses."""

    feature: HaarFeature
    threshold: float
    left_value: float   # response when feature value < threshold
    right_value: float  # response otherwise

    def predict_value(self, value: float) -> float:
        return self.left_value if value < self.threshold else self.right_value


def stump_predict(s: DecisionStump, ii: IntegralImage) -> float:
    """Stump response on a window-sized integral image."""
    return s.predict_value(eval_feature(ii, s.feature))


def stack_samples(samples: Sequence[Sample]) -> Tuple[np.ndarray, np.ndarray, int]:
    """Flatten sample integral tables into one (n, (h+1)*(w+1)) matrix.

    Returns (flat_sums, labels, table_width); all windows must share one
    geometry.
    """
    if not samples:
        raise ValueError("no samples")
    w = samples[0].window.width
    h = samples[0].window.height
    flat = np.empty((len(samples), (h + 1) * (w + 1)), dtype=np.float64)
    labels = np.empty(len(samples), dtype=np.float64)
    for i, s in enumerate(samples):
        if s.window.width != w or s.window.height != h:
            raise ValueError("samples mix window geometries")
        flat[i] = s.window.sums.reshape(-1)
        labels[i] = s.label
    return flat, labels, w + 1


def fit_stumps(values: np.ndarray, labels: np.ndarray,
               weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Fit one regression stump per column of a feature-value matrix.

    Parameters
    ----------
    values : (n_samples, n_features) feature values
    labels : (n_samples,) +1/-1
    weights : (n_samples,) non-negative, summing to 1

    Returns
    -------
    (quality, threshold, left_value, right_value), each (n_features,).
    Columns with a single distinct value degenerate to threshold +inf,
    both responses the weighted mean label, quality 0.
    """
    n = values.shape[0]
    order = np.argsort(values, axis=0, kind="stable")
    vs = np.take_along_axis(values, order, axis=0)
    ws = weights[order]
    wys = (weights * labels)[order]

    cw = np.cumsum(ws, axis=0)
    cwy = np.cumsum(wys, axis=0)
    w_tot = cw[-1]
    wy_tot = cwy[-1]

    # split after position i (0..n-2) allowed only between distinct values
    wl = cw[:-1]
    wyl = cwy[:-1]
    wr = w_tot - wl
    wyr = wy_tot - wyl
    gain = (wyl * wyl) / np.maximum(wl, _TINY) \
        + (wyr * wyr) / np.maximum(wr, _TINY) \
        - (wy_tot * wy_tot) / np.maximum(w_tot, _TINY)
    gain[vs[1:] <= vs[:-1]] = -np.inf

    cols = np.arange(values.shape[1])
    if n >= 2:
        best = np.argmax(gain, axis=0)
        best_gain = gain[best, cols]
    else:
        best = np.zeros(values.shape[1], dtype=np.intp)
        best_gain = np.full(values.shape[1], -np.inf)
    split_ok = np.isfinite(best_gain)

    mean_label = wy_tot / np.maximum(w_tot, _TINY)
    quality = np.where(split_ok, np.maximum(best_gain, 0.0), 0.0)
    threshold = np.where(
        split_ok,
        0.5 * (vs[best, cols] + vs[np.minimum(best + 1, n - 1), cols]),
        np.inf,
    )
    left = np.where(
        split_ok, wyl[best, cols] / np.maximum(wl[best, cols], _TINY), mean_label
    )
    right = np.where(
        split_ok, wyr[best, cols] / np.maximum(wr[best, cols], _TINY), mean_label
    )
    return quality, threshold, left, right


def train_stump(f: HaarFeature, samples: Sequence[Sample],
                weights: Sequence[float]) -> Tuple[DecisionStump, float]:
    """Train the best stump for one feature; returns (stump, quality)."""
    w = np.asarray(weights, dtype=np.float64)
    if len(samples) < 2:
        raise ValueError("need at least 2 samples")
    if len(samples) != w.shape[0]:
        raise ValueError("weights and samples disagree in length")
    if np.any(w < 0) or not math.isclose(float(w.sum()), 1.0, rel_tol=1e-6):
        raise ValueError("weights must be non-negative and sum to 1")

    flat, labels, table_w = stack_samples(samples)
    idx, wgt = corner_table([f], table_w)
    values = feature_values(flat, idx, wgt)
    q, thr, left, right = fit_stumps(values, labels, w)
    stump = DecisionStump(f, float(thr[0]), float(left[0]), float(right[0]))
    return stump, float(q[0])
