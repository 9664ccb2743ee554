"""Genetic search over the Haar feature space for one cascade stage.

Before a real stage is trained, a population of chromosomes (each
chromosome is one :class:`~gadaboost.haar.HaarFeature`) evolves against
the stage's samples. Fitness is the best stump split quality a member
achieves inside a short "dummy" boosted stage; sample weights may be
chained from one dummy stage to the next. Selection is a roulette
wheel over fitness, crossover swaps the lower-right corners of two
parents, and mutation jitters coordinates then redraws the type among
those the perturbed rectangle can legally carry. On even generations
spatially redundant members (rectangle IoU above the threshold,
regardless of type) are dropped and replaced by fresh random features.

Randomly generated features are marked in a registry shared across the
whole cascade run and never drawn again.

Reproducibility: all randomness flows through the single generator
passed in. Draw order per generation: two roulette draws per offspring
pair, one uniform for the crossover decision, then per child the
mutation draws (per coordinate: one uniform fire check, one integer
offset if fired; one integer type redraw if any coordinate fired);
dedup refills draw in registry order afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Set, Tuple

import numpy as np

from .boost import CandidateMatrix, StageGoal, train_stage_on_matrix
from .evaluate import iou
from .haar import (
    HaarFeature,
    HaarType,
    canonical_id,
    enumerate_features,
    feature_space_size,
    type_divisors,
)
from .stump import Sample, stack_samples

# dummy stages never stop on false alarm -- only separable data reaches 0
_DUMMY_GOAL_FA = 1e-9

Chromosome = HaarFeature


class FeatureSpaceExhausted(RuntimeError):
    """Raised when the registry cannot supply enough unused features."""


@dataclass
class GaConfig:
    population_size: int = 1000
    max_iterations: int = 50
    dummy_weak_count: int = 3
    dedup_iou_threshold: float = 0.4
    saturation_epsilon: float = 0.005
    saturation_patience: int = 3
    crossover_fraction: float = 0.8
    mutation_probability: float = 0.2
    carry_weights_between_dummies: bool = True
    carry_weights_into_real_stage: bool = False
    rng_seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if not (0.0 < self.dedup_iou_threshold < 1.0):
            raise ValueError("dedup_iou_threshold must be in (0, 1)")
        if self.dummy_weak_count < 1:
            raise ValueError("dummy_weak_count must be >= 1")


@dataclass
class Population:
    """Chromosomes with their (possibly not yet computed) fitness."""

    members: List[Chromosome]
    fitness: Optional[np.ndarray]
    generation: int = 0


@dataclass(frozen=True)
class GenerationTrace:
    generation: int
    best_fitness: float
    mean_fitness: float
    dedup_dropped: int
    refill_count: int


class UsedFeatureRegistry:
    """Canonical ids of every randomly generated feature in a run.

    Ids are only ever added; random generation consults the registry so
    no feature is drawn twice across all stages of one cascade run.
    """

    def __init__(self, window_w: int, window_h: int):
        self.window_w = window_w
        self.window_h = window_h
        self._ids: Set[int] = set()

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, feature_id: int) -> bool:
        return feature_id in self._ids

    def add(self, feature_id: int) -> None:
        if feature_id in self._ids:
            raise ValueError(f"feature id {feature_id} already registered")
        self._ids.add(feature_id)

    def remaining(self) -> int:
        return feature_space_size(self.window_w, self.window_h) - len(self._ids)


def random_feature(window_w: int, window_h: int, rng: np.random.Generator) -> HaarFeature:
    """One random valid feature (type first, then corner, then extents)."""
    while True:
        htype = HaarType(int(rng.integers(5)))
        kx, ky = type_divisors(htype)
        if window_w < kx or window_h < ky:
            continue
        x = int(rng.integers(0, window_w - kx + 1))
        x1 = x + kx * int(rng.integers(1, (window_w - x) // kx + 1))
        y = int(rng.integers(0, window_h - ky + 1))
        y1 = y + ky * int(rng.integers(1, (window_h - y) // ky + 1))
        return HaarFeature(x, y, x1, y1, htype)


def draw_unused_features(count: int, registry: UsedFeatureRegistry,
                         rng: np.random.Generator) -> List[HaarFeature]:
    """Draw ``count`` distinct unused features, marking each in the registry.

    Rejection sampling covers the common sparse case; once the request
    is dense relative to what is left (or collisions pile up) the
    remaining features are enumerated and sampled without replacement.
    """
    w, h = registry.window_w, registry.window_h
    remaining = registry.remaining()
    if remaining < count:
        raise FeatureSpaceExhausted(
            f"need {count} unused features but only {remaining} remain"
        )

    out: List[HaarFeature] = []
    misses = 0
    while len(out) < count:
        need = count - len(out)
        if 2 * need > registry.remaining() or misses > 200:
            pool = [f for f in enumerate_features(w, h)
                    if canonical_id(f, w, h) not in registry]
            picks = rng.choice(len(pool), size=need, replace=False)
            for k in picks:
                f = pool[int(k)]
                registry.add(canonical_id(f, w, h))
                out.append(f)
            break
        f = random_feature(w, h, rng)
        fid = canonical_id(f, w, h)
        if fid in registry:
            misses += 1
            continue
        misses = 0
        registry.add(fid)
        out.append(f)
    return out


def init_population(cfg: GaConfig, registry: UsedFeatureRegistry,
                    rng: np.random.Generator) -> Population:
    """Random first generation of distinct, never-before-drawn features."""
    members = draw_unused_features(cfg.population_size, registry, rng)
    return Population(members=members, fitness=None, generation=0)


def _score_impl(pop: Population, samples: Sequence[Sample], weights: np.ndarray,
                cfg: GaConfig):
    flat, labels, table_w = stack_samples(samples)
    win = samples[0].window
    cm = CandidateMatrix(flat, table_w, pop.members, win.width, win.height)
    goal = StageGoal(min_hit_rate=0.9, max_false_alarm=_DUMMY_GOAL_FA,
                     max_weak_count=cfg.dummy_weak_count)
    res = train_stage_on_matrix(cm, labels, weights, goal, record_qualities=True)
    scored = Population(pop.members, res.max_quality_per_candidate(), pop.generation)
    return scored, res.w_final, res.features_evaluated


def score_population(pop: Population, samples: Sequence[Sample],
                     weights: Sequence[float], cfg: GaConfig
                     ) -> Tuple[Population, np.ndarray]:
    """Fitness via a dummy boosted stage of ``dummy_weak_count`` rounds.

    Every member's fitness is the best split quality it reached in any
    dummy round. The returned weight vector is the dummy stage's final
    one, so callers can chain weights between scorings.
    """
    scored, w_final, _ = _score_impl(pop, samples, np.asarray(weights, float), cfg)
    return scored, w_final


def roulette_select(pop: Population, rng: np.random.Generator) -> Chromosome:
    """Fitness-proportional draw; uniform when total fitness is zero."""
    if not pop.members:
        raise ValueError("empty population")
    fitness = pop.fitness
    total = float(fitness.sum()) if fitness is not None else 0.0
    if total <= 0.0:
        return pop.members[int(rng.integers(len(pop.members)))]
    wheel = np.cumsum(fitness)
    u = rng.random() * total
    idx = int(np.searchsorted(wheel, u, side="right"))
    return pop.members[min(idx, len(pop.members) - 1)]


def crossover(a: Chromosome, b: Chromosome,
              rng: np.random.Generator) -> Tuple[Chromosome, Chromosome]:
    """One-point crossover at the lower-right corner.

    Children keep their parent's upper-left corner and type but take
    the other parent's lower-right corner, then shrink the rectangle to
    the nearest size their type allows. A child whose swapped corner
    breaks the corner ordering (or leaves no legal size) is replaced by
    its parent. The cut point is fixed, so ``rng`` is unused; parents
    share one window, which keeps swapped corners in range.
    """

    def child(parent: Chromosome, x1: int, y1: int) -> Chromosome:
        if x1 <= parent.x or y1 <= parent.y:
            return parent
        kx, ky = type_divisors(parent.htype)
        w = ((x1 - parent.x) // kx) * kx
        h = ((y1 - parent.y) // ky) * ky
        if w == 0 or h == 0:
            return parent
        return replace(parent, x1=parent.x + w, y1=parent.y + h)

    return child(a, b.x1, b.y1), child(b, a.x1, a.y1)


def mutate(c: Chromosome, rng: np.random.Generator, window_w: int, window_h: int,
           mutation_probability: float) -> Chromosome:
    """Jitter coordinates, then redraw the type among the suitable ones.

    Each coordinate independently moves by a uniform offset in [-2, 2]
    with the given probability; the rectangle is clamped back into the
    window. If anything fired, the type is redrawn uniformly from the
    types whose divisibility the rectangle can satisfy (after snapping
    its size down to a feasible multiple). Untouched chromosomes are
    returned unchanged.
    """
    if mutation_probability <= 0.0:
        return c
    coords = [c.x, c.y, c.x1, c.y1]
    fired = False
    for k in range(4):
        if rng.random() < mutation_probability:
            coords[k] += int(rng.integers(-2, 3))
            fired = True
    if not fired:
        return c

    x = min(max(coords[0], 0), window_w - 1)
    y = min(max(coords[1], 0), window_h - 1)
    x1 = min(max(coords[2], x + 1), window_w)
    y1 = min(max(coords[3], y + 1), window_h)
    w, h = x1 - x, y1 - y

    suitable = [t for t in HaarType
                if w >= type_divisors(t)[0] and h >= type_divisors(t)[1]]
    if not suitable:
        return c
    htype = suitable[int(rng.integers(len(suitable)))]
    kx, ky = type_divisors(htype)
    return HaarFeature(x, y, x + (w // kx) * kx, y + (h // ky) * ky, htype)


def dedup_spatial(pop: Population, cfg: GaConfig, registry: UsedFeatureRegistry,
                  rng: np.random.Generator) -> Tuple[Population, int, int]:
    """Drop spatially redundant members, refill with fresh random ones.

    Members are scanned in descending fitness (stable; members without
    a score rank at zero) and one is dropped when its rectangle IoU
    with any kept rectangle exceeds the threshold -- type is ignored,
    the comparison is purely spatial. Refills come from the registry's
    unused pool. Returns (population, dropped, refilled).
    """
    n = len(pop.members)
    fitness = pop.fitness if pop.fitness is not None else np.zeros(n)
    order = np.argsort(-fitness, kind="stable")

    kept_idx: List[int] = []
    kept_boxes: List[Tuple[int, int, int, int]] = []
    for i in order:
        f = pop.members[int(i)]
        box = (f.x, f.y, f.width, f.height)
        if any(iou(box, kb) > cfg.dedup_iou_threshold for kb in kept_boxes):
            continue
        kept_idx.append(int(i))
        kept_boxes.append(box)

    dropped = n - len(kept_idx)
    refill = cfg.population_size - len(kept_idx)
    members = [pop.members[i] for i in kept_idx]
    fitness_out = list(fitness[kept_idx])
    if refill > 0:
        members.extend(draw_unused_features(refill, registry, rng))
        fitness_out.extend([0.0] * refill)
    return (
        Population(members, np.asarray(fitness_out), pop.generation),
        dropped,
        refill,
    )


@dataclass
class GaStageResult:
    features: List[HaarFeature]
    w_out: np.ndarray
    trace: List[GenerationTrace] = field(default_factory=list)
    features_evaluated: int = 0


def run_stage_ga(samples: Sequence[Sample], w0: Sequence[float], cfg: GaConfig,
                 registry: UsedFeatureRegistry,
                 rng: np.random.Generator) -> GaStageResult:
    """Evolve a stage population to saturation or the iteration cap.

    Generation 0 is the scored random population; each iteration keeps
    the top half by fitness, refills with crossover/mutation offspring
    of roulette-selected parents, and on even iterations applies the
    spatial dedup. A surviving member keeps the best fitness it has
    ever recorded (rescoring under drifted weights can only raise its
    stored value), which makes the best-of-population trace monotone.
    """
    win = samples[0].window
    window_w, window_h = win.width, win.height
    if (window_w, window_h) != (registry.window_w, registry.window_h):
        raise ValueError("registry window does not match the samples")

    pop = init_population(cfg, registry, rng)
    carried = np.zeros(cfg.population_size)
    w_chain = np.asarray(w0, dtype=np.float64)
    result = GaStageResult(features=[], w_out=w_chain)

    mean_hist: List[float] = []
    flat_streak = 0
    gen = 0
    dedup_dropped = refill_count = 0

    while True:
        scored, w_after, n_eval = _score_impl(pop, samples, w_chain, cfg)
        result.features_evaluated += n_eval
        fitness = np.maximum(scored.fitness, carried)
        pop = Population(pop.members, fitness, gen)
        result.trace.append(GenerationTrace(
            gen, float(fitness.max()), float(fitness.mean()),
            dedup_dropped, refill_count,
        ))
        result.w_out = w_after
        if cfg.carry_weights_between_dummies:
            w_chain = w_after

        mean_hist.append(float(fitness.mean()))
        if gen >= cfg.max_iterations:
            break
        if len(mean_hist) >= 2:
            prev = mean_hist[-2]
            gain = (mean_hist[-1] - prev) / max(abs(prev), 1e-12)
            flat_streak = flat_streak + 1 if gain < cfg.saturation_epsilon else 0
            if flat_streak >= cfg.saturation_patience:
                break

        # next generation: elitism (top half) + offspring of roulette parents
        order = np.argsort(-fitness, kind="stable")
        survivors = order[: cfg.population_size // 2]
        members = [pop.members[int(i)] for i in survivors]
        new_carried = [float(fitness[int(i)]) for i in survivors]
        while len(members) < cfg.population_size:
            pa = roulette_select(pop, rng)
            pb = roulette_select(pop, rng)
            if rng.random() < cfg.crossover_fraction:
                ca, cb = crossover(pa, pb, rng)
            else:
                ca, cb = pa, pb
            for child in (ca, cb):
                if len(members) >= cfg.population_size:
                    break
                members.append(
                    mutate(child, rng, window_w, window_h, cfg.mutation_probability)
                )
                new_carried.append(0.0)

        gen += 1
        pop = Population(members, None, gen)
        carried = np.asarray(new_carried)
        dedup_dropped = refill_count = 0
        if gen % 2 == 0:
            staged = Population(members, carried.copy(), gen)
            deduped, dedup_dropped, refill_count = dedup_spatial(
                staged, cfg, registry, rng
            )
            pop = Population(deduped.members, None, gen)
            carried = deduped.fitness.copy()

    result.features = list(pop.members)
    return result


def evolve_stage_population(samples: Sequence[Sample], w0: Sequence[float],
                            cfg: GaConfig, registry: UsedFeatureRegistry,
                            rng: np.random.Generator,
                            trace: Optional[List[GenerationTrace]] = None,
                            ) -> Tuple[List[HaarFeature], np.ndarray]:
    """Spec-shaped front end of :func:`run_stage_ga`.

    Returns the final scored population's members and the weight vector
    chained out of the dummy stages; per-generation records are
    appended to ``trace`` when given.
    """
    res = run_stage_ga(samples, w0, cfg, registry, rng)
    if trace is not None:
        trace.extend(res.trace)
    return res.features, res.w_out
