"""Run configuration: JSON file, optional environment override, validated defaults."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .core import (
    DEFAULT_BITRATES_KBPS,
    DEFAULT_PRESETS,
    Budgets,
    OperatingGrid,
    ValidationError,
    build_operating_grid,
)
from .predictors import GBDTParams, SVMParams

CONFIG_ENV_VAR = "PRESETOPT_CONFIG"


@dataclass(frozen=True)
class KMeansParams:
    max_iter: int = 300
    tol: float = 1e-6


@dataclass(frozen=True)
class Config:
    presets: tuple[str, ...] = tuple(p.label for p in DEFAULT_PRESETS)
    bitrates_kbps: tuple[int, ...] = DEFAULT_BITRATES_KBPS
    k_clusters: int = 6
    segment_duration_s: float = 2.0
    overhead_s: float = 0.04
    num_segments: int = 6  # segments per planning window
    rate_threshold_kbps: float = 30000.0
    time_threshold_s: float = 11.0
    gbdt: GBDTParams = field(default_factory=GBDTParams)
    svm: SVMParams = field(default_factory=SVMParams)
    kmeans: KMeansParams = field(default_factory=KMeansParams)
    seed: int = 0
    corpus_segments: int = 877
    sweep_runs: int = 877
    hard_corpus: bool = False
    data_dir: str = "data"

    def __post_init__(self) -> None:
        self.grid  # validates presets and bitrates
        self.budgets
        if self.k_clusters < 1:
            raise ValidationError("k_clusters must be >= 1")
        if self.num_segments < 1:
            raise ValidationError("num_segments must be >= 1")
        if not 0 <= self.overhead_s < self.segment_duration_s:
            raise ValidationError("overhead_s must lie in [0, segment_duration_s)")
        if self.corpus_segments < 1 or self.sweep_runs < 1:
            raise ValidationError("corpus_segments and sweep_runs must be >= 1")
        if self.gbdt.n_rounds < 0 or self.gbdt.max_depth < 1 or self.gbdt.min_samples_leaf < 1:
            raise ValidationError("invalid GBDT hyperparameters")
        if not 0 < self.gbdt.learning_rate <= 1:
            raise ValidationError("GBDT learning_rate must lie in (0, 1]")
        if not (self.svm.C > 0 and self.svm.tol > 0 and self.svm.max_passes >= 1):
            raise ValidationError("invalid SVM hyperparameters")
        if self.kmeans.max_iter < 1 or self.kmeans.tol < 0:
            raise ValidationError("invalid k-means parameters")

    @property
    def grid(self) -> OperatingGrid:
        return build_operating_grid(self.presets, self.bitrates_kbps)

    @property
    def budgets(self) -> Budgets:
        return Budgets(self.rate_threshold_kbps, self.time_threshold_s)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"unknown config keys {unknown}")
        kwargs = dict(data)
        nested = {"gbdt": GBDTParams, "svm": SVMParams, "kmeans": KMeansParams}
        for key, kind in nested.items():
            if key in kwargs:
                sub = kwargs[key]
                allowed = {f.name for f in fields(kind)}
                if not isinstance(sub, dict) or set(sub) - allowed:
                    raise ValidationError(f"config section {key!r} has unknown or malformed keys")
                kwargs[key] = kind(**sub)
        for key in ("presets", "bitrates_kbps"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ValidationError(f"bad config: {exc}") from None


def load_config(path: str | os.PathLike | None = None) -> Config:
    """Explicit path, else the file named by the environment variable, else defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or None
    if path is None:
        return Config()
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"config file {p} does not exist")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file {p} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError(f"config file {p} must hold a JSON object")
    return Config.from_dict(data)
