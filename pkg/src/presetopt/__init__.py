"""Per-segment encoder preset and bitrate planning under rate and time budgets."""

from .config import Config, load_config
from .core import (
    FEATURE_NAMES,
    DEFAULT_BITRATES_KBPS,
    DEFAULT_BUDGETS,
    DEFAULT_PRESETS,
    Budgets,
    FeatureMask,
    OperatingGrid,
    OperatingPoint,
    Preset,
    SegmentFeatures,
    ValidationError,
    build_operating_grid,
    derive_time_threshold,
    default_grid,
)
from .evaluation import (
    SweepReport,
    baseline_plan,
    bd_rate,
    summarize_plan,
    sweep_rate_budget,
    sweep_time_budget,
)
from .pipeline import ModelSet, build_instance, build_models_from_corpus
from .rdmodel import ClusterModel, LogCurve, RDCurve, eval_curve, fit_centroid, kmeans_cluster
from .solver import PlanningInstance, Solution, solve_bb, solve_bruteforce
from .synth import gen_corpus

__all__ = [
    "FEATURE_NAMES",
    "DEFAULT_BITRATES_KBPS",
    "DEFAULT_BUDGETS",
    "DEFAULT_PRESETS",
    "Budgets",
    "ClusterModel",
    "Config",
    "FeatureMask",
    "LogCurve",
    "ModelSet",
    "OperatingGrid",
    "OperatingPoint",
    "PlanningInstance",
    "Preset",
    "RDCurve",
    "SegmentFeatures",
    "Solution",
    "SweepReport",
    "ValidationError",
    "baseline_plan",
    "bd_rate",
    "build_instance",
    "build_models_from_corpus",
    "build_operating_grid",
    "derive_time_threshold",
    "eval_curve",
    "fit_centroid",
    "gen_corpus",
    "kmeans_cluster",
    "load_config",
    "default_grid",
    "solve_bb",
    "solve_bruteforce",
    "summarize_plan",
    "sweep_rate_budget",
    "sweep_time_budget",
]
