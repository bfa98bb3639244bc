"""Per-preset transcoding-time regressors."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..core import FeatureMask, Preset, SegmentFeatures, ValidationError
from .gbdt import BoostedTrees, Tree, fit_boosted_trees
from .validation import mape, rfecv

BITRATE_COLUMN = "target_bitrate_kbps"
TIME_FLOOR_S = 1e-6


@dataclass(frozen=True)
class TimeRow:
    features: SegmentFeatures
    preset: Preset
    target_bitrate_kbps: int
    transcode_time_s: float

    def __post_init__(self) -> None:
        if not self.transcode_time_s > 0:
            raise ValidationError(
                f"{self.features.segment_id}: transcode_time_s must be positive"
            )
        if self.target_bitrate_kbps <= 0:
            raise ValidationError(f"{self.features.segment_id}: bitrate must be positive")


@dataclass(frozen=True)
class GBDTParams:
    n_rounds: int = 200
    max_depth: int = 4
    learning_rate: float = 0.1
    min_samples_leaf: int = 2
    max_bins: int = 255


@dataclass(frozen=True)
class TimeModel:
    preset: Preset
    feature_names: tuple[str, ...]
    booster: BoostedTrees
    params: GBDTParams = field(default_factory=GBDTParams)

    @property
    def trees(self) -> tuple[Tree, ...]:
        return self.booster.trees

    @property
    def learning_rate(self) -> float:
        return self.booster.learning_rate

    @property
    def base_prediction(self) -> float:
        return self.booster.base_prediction

    def design(self, features: Sequence[SegmentFeatures], bitrates) -> np.ndarray:
        feats = np.array([f.vector(self.feature_names) for f in features], dtype=float)
        feats = feats.reshape(len(features), len(self.feature_names))
        return np.column_stack([feats, np.asarray(bitrates, dtype=float)])


def default_time_features(mask: FeatureMask | None = None) -> tuple[str, ...]:
    return (mask or FeatureMask()).time_features


def time_design_matrix(rows: Sequence[TimeRow], feature_names: Sequence[str]) -> np.ndarray:
    X = np.array([r.features.vector(feature_names) for r in rows], dtype=float)
    X = X.reshape(len(rows), len(feature_names))
    return np.column_stack([X, [r.target_bitrate_kbps for r in rows]])


def train_time_regressor(
    rows: Sequence[TimeRow],
    params: GBDTParams | None = None,
    feature_names: Sequence[str] | None = None,
) -> TimeModel:
    """Fit a boosted-tree regressor for one preset.

    The input vector is the selected time features followed by the target
    bitrate.
    """
    if not rows:
        raise ValidationError("cannot train a time regressor on an empty dataset")
    presets = {r.preset for r in rows}
    if len(presets) > 1:
        raise ValidationError(f"rows mix presets {sorted(str(p) for p in presets)}")
    params = params or GBDTParams()
    names = tuple(feature_names) if feature_names is not None else default_time_features()
    X = time_design_matrix(rows, names)
    y = np.array([r.transcode_time_s for r in rows])
    booster = fit_boosted_trees(
        X, y,
        n_rounds=params.n_rounds,
        max_depth=params.max_depth,
        learning_rate=params.learning_rate,
        min_samples_leaf=params.min_samples_leaf,
        max_bins=params.max_bins,
    )
    return TimeModel(presets.pop(), names, booster, params)


def predict_time(model: TimeModel, features: SegmentFeatures, bitrate_kbps: int) -> float:
    if not bitrate_kbps > 0:
        raise ValidationError("bitrate must be positive")
    raw = model.booster.predict(model.design([features], [bitrate_kbps]))[0]
    return max(float(raw), TIME_FLOOR_S)


def predict_times(
    model: TimeModel, features: Sequence[SegmentFeatures], bitrates_kbps: Sequence[int]
) -> np.ndarray:
    """Predicted seconds for every (segment, bitrate) pair, shape (n_segments, n_bitrates)."""
    n, m = len(features), len(bitrates_kbps)
    rep = [f for f in features for _ in range(m)]
    rates = list(bitrates_kbps) * n
    raw = model.booster.predict(model.design(rep, rates)).reshape(n, m)
    return np.maximum(raw, TIME_FLOOR_S)


def select_time_features(
    rows: Sequence[TimeRow],
    params: GBDTParams | None = None,
    candidates: Sequence[str] | None = None,
    folds: int = 5,
    seed: int = 0,
) -> tuple[str, ...]:
    """Backward-eliminate time features for one preset by k-fold MAPE."""
    names = tuple(candidates) if candidates is not None else default_time_features()

    def trainer(train_rows, idx):
        return train_time_regressor(train_rows, params, [names[i] for i in idx])

    def metric(model, valid_rows):
        X = time_design_matrix(valid_rows, model.feature_names)
        pred = np.maximum(model.booster.predict(X), TIME_FLOOR_S)
        return mape(pred, [r.transcode_time_s for r in valid_rows])

    keep = rfecv(list(rows), trainer, metric, folds=folds, n_features=len(names), seed=seed)
    return tuple(names[i] for i in keep)
