"""Multi-stage cascade training and scaled window scoring.

Stage k trains on positives that survived stages 1..k-1 and on negative
windows harvested from the negative image pool that the current cascade
prefix falsely accepts, so later stages see ever harder material. The
candidate feature set per stage is either the full enumeration
(baseline mode) or the final population of a genetic run (GA mode).

Two deterministic random streams are split off the configured seed: one
for negative harvesting, one for the genetic search. The split keeps
the harvested sample sequence identical across modes, which is what
makes a zero-iteration full-space GA run reproduce the baseline model
bit for bit.

Training windows are mean/variance normalized before they reach this
module. Detection-time scoring compensates instead of normalizing
pixels: feature sums are divided by the window's pixel deviation
(from the squared-sum table) and by the scaled/base area ratio of the
feature rectangle.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .boost import CandidateMatrix, Stage, StageGoal, train_stage_on_matrix, uniform_weights
from .ga import GaConfig, GenerationTrace, UsedFeatureRegistry, run_stage_ga
from .haar import (
    HaarFeature,
    HaarType,
    IntegralImage,
    compute_integral,
    corner_table,
    enumerate_features,
    type_divisors,
)
from .imgio import normalize_window, resample_window
from .stump import DecisionStump, Sample, stack_samples

MODE_BASELINE = "baseline"
MODE_GA = "ga"

_FORMAT_HEADER = "gadaboost cascade format 1"


class TrainingDataError(RuntimeError):
    """Pools cannot supply what the training schedule demands."""


@dataclass
class TrainConfig:
    window_w: int = 24
    window_h: int = 24
    num_stages: int = 17
    pos_per_stage: int = 500
    neg_per_stage: int = 500
    stage_goal: StageGoal = field(default_factory=StageGoal)
    mode: str = MODE_BASELINE
    ga: Optional[GaConfig] = None
    rng_seed: int = 0
    max_harvest_attempts: int = 200_000

    def __post_init__(self):
        if self.num_stages < 1:
            raise ValueError("num_stages must be >= 1")
        if self.mode not in (MODE_BASELINE, MODE_GA):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == MODE_GA and self.ga is None:
            self.ga = GaConfig()


@dataclass
class Cascade:
    """Ordered boosted stages over a fixed training window."""

    window_w: int
    window_h: int
    stages: List[Stage]
    metadata: Dict[str, object] = field(default_factory=dict)

    def accepts_window(self, ii: IntegralImage) -> bool:
        """Scale-1 acceptance on a training-substrate window."""
        return all(stage.accepts(ii) for stage in self.stages)


@dataclass
class StageReport:
    index: int
    wall_clock_s: float
    features_evaluated: int
    n_stumps: int
    achieved_hit: float
    achieved_fa: float
    goal_met: bool
    harvest_attempts: int
    ga_trace: Optional[List[GenerationTrace]] = None


@dataclass
class TrainReport:
    mode: str
    seed: int
    window_w: int
    window_h: int
    stages: List[StageReport] = field(default_factory=list)
    early_stopped: bool = False
    wall_clock_s: float = 0.0

    @property
    def features_evaluated(self) -> int:
        return sum(s.features_evaluated for s in self.stages)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "window": [self.window_w, self.window_h],
            "early_stopped": self.early_stopped,
            "wall_clock_s": self.wall_clock_s,
            "features_evaluated": self.features_evaluated,
            "stages": [
                {
                    "index": s.index,
                    "wall_clock_s": s.wall_clock_s,
                    "features_evaluated": s.features_evaluated,
                    "n_stumps": s.n_stumps,
                    "achieved_hit": s.achieved_hit,
                    "achieved_fa": s.achieved_fa,
                    "goal_met": s.goal_met,
                    "harvest_attempts": s.harvest_attempts,
                }
                for s in self.stages
            ],
        }


def _surviving_positives(samples: Sequence[Sample], stages: Sequence[Stage],
                         count: int) -> List[Sample]:
    out = []
    for s in samples:
        if all(stage.accepts(s.window) for stage in stages):
            out.append(s)
            if len(out) == count:
                break
    return out


def _harvest_negatives(neg_images: Sequence[np.ndarray], stages: Sequence[Stage],
                       window_w: int, window_h: int, count: int,
                       rng: np.random.Generator,
                       max_attempts: int) -> Tuple[List[Sample], int]:
    """Random windows from the pool that the cascade prefix accepts.

    Draw order per attempt: image index, scale (when the image allows
    any upscaling), then x and y. Crops are block-mean resampled to the
    training window and normalized like ingested samples.
    """
    out: List[Sample] = []
    attempts = 0
    usable = [img for img in neg_images
              if img.shape[0] >= window_h and img.shape[1] >= window_w]
    if not usable:
        return out, attempts
    while len(out) < count and attempts < max_attempts:
        attempts += 1
        img = usable[int(rng.integers(len(usable)))]
        ih, iw = img.shape
        s_max = min(iw / window_w, ih / window_h)
        s = float(rng.uniform(1.0, s_max)) if s_max > 1.0 else 1.0
        cw = min(max(int(math.floor(window_w * s + 0.5)), window_w), iw)
        ch = min(max(int(math.floor(window_h * s + 0.5)), window_h), ih)
        x = int(rng.integers(0, iw - cw + 1))
        y = int(rng.integers(0, ih - ch + 1))
        win = normalize_window(resample_window(img[y:y + ch, x:x + cw],
                                               window_h, window_w))
        ii = compute_integral(win)
        if all(stage.accepts(ii) for stage in stages):
            out.append(Sample(ii, -1))
    return out, attempts


def train_cascade(pos_pool: Sequence[np.ndarray], neg_image_pool: Sequence[np.ndarray],
                  cfg: TrainConfig) -> Tuple[Cascade, TrainReport]:
    """Train a cascade from normalized positive windows and raw negatives.

    ``pos_pool`` holds window-sized normalized samples; ``neg_image_pool``
    holds arbitrary-size grayscale images to harvest false positives
    from. Running out of harvestable negatives ends training early with
    the report flagged; running out of surviving positives is an error.
    """
    w, h = cfg.window_w, cfg.window_h
    pos_samples = []
    for win in pos_pool:
        win = np.asarray(win)
        if win.shape != (h, w):
            raise TrainingDataError(
                f"positive window shape {win.shape} != ({h}, {w})"
            )
        pos_samples.append(Sample(compute_integral(win), 1))
    if not pos_samples or not neg_image_pool:
        raise TrainingDataError("both pools must be non-empty")
    neg_images = [np.asarray(img) for img in neg_image_pool]

    harvest_seq, ga_seq = np.random.SeedSequence(cfg.rng_seed).spawn(2)
    harvest_rng = np.random.default_rng(harvest_seq)
    ga_rng = np.random.default_rng(ga_seq)

    baseline_candidates: Optional[List[HaarFeature]] = None
    baseline_tables = None
    registry: Optional[UsedFeatureRegistry] = None
    if cfg.mode == MODE_BASELINE:
        baseline_candidates = enumerate_features(w, h)
    else:
        registry = UsedFeatureRegistry(w, h)

    t_start = time.perf_counter()
    report = TrainReport(mode=cfg.mode, seed=cfg.rng_seed, window_w=w, window_h=h)
    stages: List[Stage] = []

    for k in range(cfg.num_stages):
        t0 = time.perf_counter()
        stage_pos = _surviving_positives(pos_samples, stages, cfg.pos_per_stage)
        if len(stage_pos) < cfg.pos_per_stage:
            raise TrainingDataError(
                f"stage {k}: only {len(stage_pos)} of {cfg.pos_per_stage} "
                "positives survive the cascade prefix"
            )
        stage_neg, attempts = _harvest_negatives(
            neg_images, stages, w, h, cfg.neg_per_stage, harvest_rng,
            cfg.max_harvest_attempts,
        )
        if len(stage_neg) < cfg.neg_per_stage:
            report.early_stopped = True
            break

        samples = stage_pos + stage_neg
        flat, labels, table_w = stack_samples(samples)
        w0 = uniform_weights(len(samples))

        ga_result = None
        if cfg.mode == MODE_GA:
            ga_result = run_stage_ga(samples, w0, cfg.ga, registry, ga_rng)
            candidates = ga_result.features
            tables = None
            w_real = ga_result.w_out if cfg.ga.carry_weights_into_real_stage else w0
        else:
            candidates = baseline_candidates
            if baseline_tables is None:
                baseline_tables = corner_table(candidates, table_w)
            tables = baseline_tables
            w_real = w0

        cm = CandidateMatrix(flat, table_w, candidates, w, h, tables=tables)
        res = train_stage_on_matrix(cm, labels, w_real, cfg.stage_goal)
        stages.append(res.stage)

        evaluated = res.features_evaluated
        trace = None
        if ga_result is not None:
            evaluated += ga_result.features_evaluated
            trace = ga_result.trace
        report.stages.append(StageReport(
            index=k,
            wall_clock_s=time.perf_counter() - t0,
            features_evaluated=evaluated,
            n_stumps=len(res.stage.stumps),
            achieved_hit=res.achieved_hit,
            achieved_fa=res.achieved_fa,
            goal_met=res.goal_met,
            harvest_attempts=attempts,
            ga_trace=trace,
        ))

    if not stages:
        raise TrainingDataError("could not harvest negatives for any stage")
    report.wall_clock_s = time.perf_counter() - t_start
    cascade = Cascade(w, h, stages, metadata={"mode": cfg.mode, "seed": cfg.rng_seed})
    return cascade, report


# ---------------------------------------------------------------------------
# Scaled scoring.
# ---------------------------------------------------------------------------


def _ri(v: float) -> int:
    """Deterministic round-half-up to int."""
    return int(math.floor(v + 0.5))


@dataclass(frozen=True)
class ScaledStump:
    rows: np.ndarray      # corner row offsets within the scaled window
    cols: np.ndarray
    signs: np.ndarray
    inv_area: float       # base area / scaled area of the feature rect
    threshold: float
    left_value: float
    right_value: float


@dataclass(frozen=True)
class ScaledStagePlan:
    stumps: Tuple[ScaledStump, ...]
    threshold: float


def _scale_feature_rect(f: HaarFeature, scale: float, scaled_w: int,
                        scaled_h: int) -> HaarFeature:
    kx, ky = type_divisors(f.htype)
    fw = max(kx, (_ri(f.width * scale) // kx) * kx)
    fh = max(ky, (_ri(f.height * scale) // ky) * ky)
    fw = min(fw, (scaled_w // kx) * kx)
    fh = min(fh, (scaled_h // ky) * ky)
    if fw <= 0 or fh <= 0:
        raise ValueError(f"window {scaled_w}x{scaled_h} too small for {f} at {scale}")
    fx = min(max(_ri(f.x * scale), 0), scaled_w - fw)
    fy = min(max(_ri(f.y * scale), 0), scaled_h - fh)
    return HaarFeature(fx, fy, fx + fw, fy + fh, f.htype)


def scale_stage_plan(stage: Stage, scale: float, window_w: int,
                     window_h: int) -> ScaledStagePlan:
    """Precompute corner lookups of a stage's stumps at one scale."""
    scaled_w = _ri(window_w * scale)
    scaled_h = _ri(window_h * scale)
    stumps = []
    for st in stage.stumps:
        f = st.feature
        sf = _scale_feature_rect(f, scale, scaled_w, scaled_h)
        rows, cols, signs = [], [], []
        for rx, ry, rx1, ry1, wgt in sf.rects():
            for yy, xx, sign in ((ry1, rx1, 1), (ry, rx1, -1), (ry1, rx, -1), (ry, rx, 1)):
                rows.append(yy)
                cols.append(xx)
                signs.append(sign * wgt)
        stumps.append(ScaledStump(
            rows=np.asarray(rows), cols=np.asarray(cols),
            signs=np.asarray(signs, dtype=np.float64),
            inv_area=(f.width * f.height) / (sf.width * sf.height),
            threshold=st.threshold,
            left_value=st.left_value,
            right_value=st.right_value,
        ))
    return ScaledStagePlan(tuple(stumps), stage.stage_threshold)


def stage_scores_at(plan: ScaledStagePlan, sums: np.ndarray, ys: np.ndarray,
                    xs: np.ndarray, sd: np.ndarray) -> np.ndarray:
    """Stage scores for window origins (ys, xs) with per-window deviations."""
    score = np.zeros(ys.shape[0])
    for st in plan.stumps:
        raw = np.zeros(ys.shape[0])
        for c in range(st.signs.shape[0]):
            raw += st.signs[c] * sums[ys + st.rows[c], xs + st.cols[c]]
        val = raw * st.inv_area / sd
        score += np.where(val < st.threshold, st.left_value, st.right_value)
    return score


def cascade_score(c: Cascade, ii: IntegralImage, ox: int, oy: int,
                  scale: float = 1.0) -> Tuple[bool, int, float]:
    """Score one window; returns (accepted, rejection_stage, margin).

    Stages are evaluated in order and the first rejection short-circuits
    (its 0-based index is returned; -1 when accepted). The margin is the
    last evaluated stage's score minus its threshold. Feature sums are
    area-renormalized for the scale and divided by the window deviation.
    """
    scaled_w = _ri(c.window_w * scale)
    scaled_h = _ri(c.window_h * scale)
    if ox < 0 or oy < 0 or ox + scaled_w > ii.width or oy + scaled_h > ii.height:
        raise ValueError("scaled window out of image bounds")
    ys = np.array([oy])
    xs = np.array([ox])
    sd = np.array([ii.window_stddev(ox, oy, ox + scaled_w, oy + scaled_h)])
    margin = 0.0
    for idx, stage in enumerate(c.stages):
        plan = scale_stage_plan(stage, scale, c.window_w, c.window_h)
        score = stage_scores_at(plan, ii.sums, ys, xs, sd)
        margin = float(score[0]) - plan.threshold
        if margin < 0:
            return False, idx, margin
    return True, -1, margin


# ---------------------------------------------------------------------------
# Model file format.
# ---------------------------------------------------------------------------


def serialize_cascade(c: Cascade) -> str:
    """Versioned text form; floats keep full round-trip precision."""
    lines = [_FORMAT_HEADER, f"window {c.window_w} {c.window_h}",
             f"stages {len(c.stages)}"]
    for i, stage in enumerate(c.stages):
        lines.append(f"stage {i} {len(stage.stumps)} {float(stage.stage_threshold)!r}")
        for st in stage.stumps:
            f = st.feature
            lines.append(
                f"stump {int(f.htype)} {f.x} {f.y} {f.x1} {f.y1} "
                f"{float(st.threshold)!r} {float(st.left_value)!r} {float(st.right_value)!r}"
            )
    return "\n".join(lines) + "\n"


def deserialize_cascade(text: str) -> Cascade:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != _FORMAT_HEADER:
        raise ValueError("not a cascade model file")
    if not lines[1].startswith("window ") or not lines[2].startswith("stages "):
        raise ValueError("malformed cascade header")
    _, w, h = lines[1].split()
    window_w, window_h = int(w), int(h)
    n_stages = int(lines[2].split()[1])

    stages: List[Stage] = []
    pos = 3
    for i in range(n_stages):
        parts = lines[pos].split()
        if parts[0] != "stage" or int(parts[1]) != i:
            raise ValueError(f"expected stage {i} at line {pos + 1}")
        n_stumps = int(parts[2])
        if n_stumps < 1:
            raise ValueError(f"stage {i} has no stumps")
        stage_threshold = float(parts[3])
        pos += 1
        stumps = []
        for _ in range(n_stumps):
            sp = lines[pos].split()
            if sp[0] != "stump":
                raise ValueError(f"expected stump at line {pos + 1}")
            htype = HaarType(int(sp[1]))
            f = HaarFeature(int(sp[2]), int(sp[3]), int(sp[4]), int(sp[5]), htype)
            if not f.is_valid(window_w, window_h):
                raise ValueError(f"invalid stump feature at line {pos + 1}")
            stumps.append(DecisionStump(f, float(sp[6]), float(sp[7]), float(sp[8])))
            pos += 1
        stages.append(Stage(stumps, stage_threshold))
    return Cascade(window_w, window_h, stages)


def save_cascade(c: Cascade, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_cascade(c))


def load_cascade(path) -> Cascade:
    with open(path) as fh:
        return deserialize_cascade(fh.read())
