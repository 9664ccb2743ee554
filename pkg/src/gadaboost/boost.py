"""Gentle-AdaBoost stage training over an explicit candidate feature set.

One operation serves two callers: real cascade stages run until the
stage false-alarm goal is met (or the weak-classifier budget runs out),
and GA "dummy" stages run a fixed small number of rounds purely to
score a population. Each round fits a regression stump per candidate,
keeps the best one (ties broken by lowest canonical id, so candidate
order never matters), and reweights samples with
``w <- w * exp(-label * response)``.

After every round the stage threshold is re-tuned to the largest value
that still meets the hit-rate goal on the training positives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .haar import HaarFeature, IntegralImage, canonical_id, corner_table, feature_values
from .stump import DecisionStump, Sample, fit_stumps, stack_samples, stump_predict

# feature-value matrices above this entry count are recomputed per round
# in blocks instead of being cached for the whole stage (memory cap)
_CACHE_LIMIT = 32_000_000
_BLOCK = 8192


@dataclass(frozen=True)
class StageGoal:
    """Per-stage training targets."""

    min_hit_rate: float = 0.9
    max_false_alarm: float = 0.5
    max_weak_count: int = 100

    def __post_init__(self):
        if not (0.0 < self.min_hit_rate <= 1.0):
            raise ValueError("min_hit_rate must be in (0, 1]")
        if not (0.0 < self.max_false_alarm < 1.0):
            raise ValueError("max_false_alarm must be in (0, 1)")
        if self.max_weak_count < 1:
            raise ValueError("max_weak_count must be >= 1")


@dataclass
class Stage:
    """A boosted committee of stumps with an acceptance threshold.

    The stage score of a window is the sum of stump responses; the
    window passes iff score >= stage_threshold.
    """

    stumps: List[DecisionStump]
    stage_threshold: float

    def evaluate(self, ii: IntegralImage) -> float:
        return sum(stump_predict(s, ii) for s in self.stumps)

    def accepts(self, ii: IntegralImage) -> bool:
        return self.evaluate(ii) >= self.stage_threshold


def uniform_weights(n: int) -> np.ndarray:
    """Standard boosting initialization: equal mass, sum 1."""
    if n < 1:
        raise ValueError("need at least one sample")
    return np.full(n, 1.0 / n)


class CandidateMatrix:
    """Feature-value plumbing for one candidate set over one sample set.

    Values never change between boost rounds (only weights do), so they
    are computed once and cached when they fit in the memory budget;
    otherwise each round recomputes them block by block.
    """

    def __init__(self, flat_sums: np.ndarray, table_w: int,
                 features: Sequence[HaarFeature], window_w: int, window_h: int,
                 tables: Optional[Tuple[np.ndarray, np.ndarray]] = None):
        if len(features) == 0:
            raise ValueError("empty candidate set")
        self.features = list(features)
        self.ids = np.array(
            [canonical_id(f, window_w, window_h) for f in self.features], dtype=np.int64
        )
        self._flat = flat_sums
        # tables may be precomputed once and shared across stages
        self._idx, self._wgt = tables if tables is not None else corner_table(
            self.features, table_w
        )
        n_entries = flat_sums.shape[0] * len(self.features)
        self._values: Optional[np.ndarray] = None
        if n_entries <= _CACHE_LIMIT:
            self._values = feature_values(flat_sums, self._idx, self._wgt)

    def __len__(self) -> int:
        return len(self.features)

    def values_block(self, block: slice) -> np.ndarray:
        if self._values is not None:
            return self._values[:, block]
        return feature_values(self._flat, self._idx, self._wgt, block)

    def column(self, i: int) -> np.ndarray:
        return self.values_block(slice(i, i + 1))[:, 0]

    def fit_all(self, labels: np.ndarray,
                weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Per-candidate (quality, threshold, left, right) under weights."""
        parts = []
        for start in range(0, len(self.features), _BLOCK):
            block = slice(start, min(start + _BLOCK, len(self.features)))
            parts.append(fit_stumps(self.values_block(block), labels, weights))
        return tuple(np.concatenate([p[k] for p in parts]) for k in range(4))


def _select_best(quality: np.ndarray, ids: np.ndarray) -> int:
    """Index of the max-quality candidate; ties go to the lowest id."""
    top = quality.max()
    ties = np.flatnonzero(quality == top)
    return int(ties[np.argmin(ids[ties])])


@dataclass
class RoundRecord:
    stump: DecisionStump
    quality: float
    per_candidate_quality: Optional[np.ndarray] = None


@dataclass
class StageTrainResult:
    """Everything a caller might need from one stage training run."""

    stage: Stage
    w_final: np.ndarray
    achieved_hit: float
    achieved_fa: float
    goal_met: bool
    rounds: List[RoundRecord] = field(default_factory=list)
    features_evaluated: int = 0

    def max_quality_per_candidate(self) -> np.ndarray:
        """Elementwise max of per-candidate qualities across rounds."""
        stacks = [r.per_candidate_quality for r in self.rounds]
        if any(s is None for s in stacks):
            raise ValueError("stage was trained without quality recording")
        return np.maximum.reduce(stacks)


def _stage_threshold(pos_scores: np.ndarray, min_hit_rate: float) -> float:
    # k-th largest positive score; k = smallest count meeting the hit goal
    n_pos = pos_scores.shape[0]
    k = int(math.ceil(min_hit_rate * n_pos - 1e-9))
    k = min(max(k, 1), n_pos)
    return float(np.partition(pos_scores, n_pos - k)[n_pos - k])


def train_stage_on_matrix(cm: CandidateMatrix, labels: np.ndarray, w0: np.ndarray,
                          goal: StageGoal, record_qualities: bool = False) -> StageTrainResult:
    """Boost rounds over a prepared candidate matrix (the fast path)."""
    pos = labels > 0
    neg = ~pos
    if not pos.any() or not neg.any():
        raise ValueError("both classes must be present")
    w = np.asarray(w0, dtype=np.float64).copy()
    w = w / w.sum()

    scores = np.zeros(labels.shape[0])
    rounds: List[RoundRecord] = []
    stumps: List[DecisionStump] = []
    evaluated = 0
    threshold = 0.0
    hit = fa = 0.0
    goal_met = False

    while True:
        quality, thr, left, right = cm.fit_all(labels, w)
        evaluated += len(cm)
        best = _select_best(quality, cm.ids)
        stump = DecisionStump(
            cm.features[best], float(thr[best]), float(left[best]), float(right[best])
        )
        stumps.append(stump)
        rounds.append(RoundRecord(
            stump, float(quality[best]),
            quality.copy() if record_qualities else None,
        ))

        pred = np.where(cm.column(best) < stump.threshold,
                        stump.left_value, stump.right_value)
        w = w * np.exp(-labels * pred)
        w = w / w.sum()

        scores += pred
        threshold = _stage_threshold(scores[pos], goal.min_hit_rate)
        hit = float((scores[pos] >= threshold).mean())
        fa = float((scores[neg] >= threshold).mean())
        if fa <= goal.max_false_alarm:
            goal_met = True
            break
        if len(stumps) >= goal.max_weak_count:
            break

    return StageTrainResult(
        stage=Stage(stumps, threshold),
        w_final=w,
        achieved_hit=hit,
        achieved_fa=fa,
        goal_met=goal_met,
        rounds=rounds,
        features_evaluated=evaluated,
    )


def _matrix_for_samples(candidates: Sequence[HaarFeature],
                        samples: Sequence[Sample]) -> Tuple[CandidateMatrix, np.ndarray]:
    flat, labels, table_w = stack_samples(samples)
    win = samples[0].window
    return CandidateMatrix(flat, table_w, candidates, win.width, win.height), labels


def boost_round(candidates: Sequence[HaarFeature], samples: Sequence[Sample],
                weights: Sequence[float]
                ) -> Tuple[DecisionStump, float, Dict[int, float], np.ndarray]:
    """One boosting round: best stump, its quality, the full per-feature
    quality map (canonical id -> quality) and the updated weights."""
    if len(candidates) == 0:
        raise ValueError("empty candidate set")
    cm, labels = _matrix_for_samples(candidates, samples)
    w = np.asarray(weights, dtype=np.float64)

    quality, thr, left, right = cm.fit_all(labels, w)
    best = _select_best(quality, cm.ids)
    stump = DecisionStump(
        cm.features[best], float(thr[best]), float(left[best]), float(right[best])
    )
    pred = np.where(cm.column(best) < stump.threshold, stump.left_value, stump.right_value)
    w_next = w * np.exp(-labels * pred)
    w_next = w_next / w_next.sum()
    per_feature = {int(i): float(q) for i, q in zip(cm.ids, quality)}
    return stump, float(quality[best]), per_feature, w_next


def train_stage(candidates: Sequence[HaarFeature], pos_samples: Sequence[Sample],
                neg_samples: Sequence[Sample], goal: StageGoal,
                w0: Sequence[float]) -> Tuple[Stage, np.ndarray, float, float]:
    """Train one boosted stage; returns (stage, w_final, hit, false_alarm).

    Samples are ordered positives-then-negatives and ``w0`` follows that
    order. An unreachable goal is not an error: the returned rates show
    the best effort after ``max_weak_count`` rounds.
    """
    if not pos_samples or not neg_samples:
        raise ValueError("both classes must be non-empty")
    samples = list(pos_samples) + list(neg_samples)
    cm, labels = _matrix_for_samples(candidates, samples)
    res = train_stage_on_matrix(cm, labels, np.asarray(w0, dtype=np.float64), goal)
    return res.stage, res.w_final, res.achieved_hit, res.achieved_fa
