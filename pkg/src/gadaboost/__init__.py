"""GAdaBoost: boosted Haar cascades with genetic feature selection.

The package trains Viola-Jones style cascades of Haar-feature decision
stumps with two interchangeable feature-selection back ends: the
exhaustive AdaBoost scan over every window feature (baseline) and a
genetic search that evolves a small feature population per stage and
hands only that population to the boosting loop. A sliding-window
detector, an IoU-based evaluator and a benchmarking CLI round out the
toolkit so the speed/accuracy trade of the two back ends can be
measured on any annotated corpus.
"""

from .boost import Stage, StageGoal, boost_round, train_stage, uniform_weights
from .cascade import (
    Cascade,
    TrainConfig,
    TrainingDataError,
    TrainReport,
    cascade_score,
    deserialize_cascade,
    load_cascade,
    save_cascade,
    serialize_cascade,
    train_cascade,
)
from .detect import Detection, detect, group_detections
from .evaluate import (
    GroundTruthBox,
    RocPoint,
    aggregate_runs,
    iou,
    match_detections,
    roc_points,
)
from .ga import (
    Chromosome,
    GaConfig,
    GenerationTrace,
    Population,
    UsedFeatureRegistry,
    crossover,
    dedup_spatial,
    evolve_stage_population,
    init_population,
    mutate,
    roulette_select,
    score_population,
)
from .haar import (
    HaarFeature,
    HaarType,
    IntegralImage,
    canonical_id,
    compute_integral,
    enumerate_features,
    eval_feature,
    feature_space_size,
)
from .stump import DecisionStump, Sample, stump_predict, train_stump

__version__ = "0.1.0"

__all__ = [
    "Cascade",
    "Chromosome",
    "DecisionStump",
    "Detection",
    "GaConfig",
    "GenerationTrace",
    "GroundTruthBox",
    "HaarFeature",
    "HaarType",
    "IntegralImage",
    "Population",
    "RocPoint",
    "Sample",
    "Stage",
    "StageGoal",
    "TrainConfig",
    "TrainReport",
    "TrainingDataError",
    "UsedFeatureRegistry",
    "aggregate_runs",
    "boost_round",
    "canonical_id",
    "cascade_score",
    "compute_integral",
    "crossover",
    "dedup_spatial",
    "deserialize_cascade",
    "detect",
    "enumerate_features",
    "eval_feature",
    "evolve_stage_population",
    "feature_space_size",
    "group_detections",
    "init_population",
    "iou",
    "load_cascade",
    "match_detections",
    "mutate",
    "roc_points",
    "roulette_select",
    "save_cascade",
    "score_population",
    "serialize_cascade",
    "stump_predict",
    "train_cascade",
    "train_stage",
    "train_stump",
    "uniform_weights",
]
