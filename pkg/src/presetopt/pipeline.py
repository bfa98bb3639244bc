"""Train the per-preset model set and turn segments into planning instances."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import OperatingGrid, Preset, SegmentFeatures, ValidationError
from .predictors import (
    GBDTParams,
    RDClassModel,
    RDRow,
    SVMParams,
    TimeModel,
    TimeRow,
    predict_times,
    train_rd_classifier,
    train_time_regressor,
)
from .rdmodel import ClusterModel, RDCurve, eval_curve, kmeans_cluster
from .solver import PlanningInstance


@dataclass
class ModelSet:
    cluster_models: dict[Preset, ClusterModel] = field(default_factory=dict)
    time_models: dict[Preset, TimeModel] = field(default_factory=dict)
    rd_classifiers: dict[Preset, RDClassModel] = field(default_factory=dict)

    def check_covers(self, grid: OperatingGrid) -> None:
        for p in grid.presets:
            for name, table in (
                ("time model", self.time_models),
                ("cluster model", self.cluster_models),
                ("R-D classifier", self.rd_classifiers),
            ):
                if p not in table:
                    raise ValidationError(f"missing {name} for preset {p}")


def fit_cluster_models(
    curves_by_preset: Mapping[Preset, Sequence[RDCurve]],
    k: int = 6,
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> tuple[dict[Preset, ClusterModel], dict[Preset, list[int]]]:
    models, labels = {}, {}
    for preset, curves in curves_by_preset.items():
        models[preset], labels[preset] = kmeans_cluster(
            list(curves), k=k, seed=seed, max_iter=max_iter, tol=tol, preset=preset
        )
    return models, labels


def fit_time_models(
    rows_by_preset: Mapping[Preset, Sequence[TimeRow]],
    params: GBDTParams | None = None,
    feature_names: Mapping[Preset, Sequence[str]] | None = None,
) -> dict[Preset, TimeModel]:
    return {
        p: train_time_regressor(rows, params, (feature_names or {}).get(p))
        for p, rows in rows_by_preset.items()
    }


def fit_rd_classifiers(
    rows_by_preset: Mapping[Preset, Sequence[RDRow]],
    params: SVMParams | None = None,
) -> dict[Preset, RDClassModel]:
    return {p: train_rd_classifier(rows, params) for p, rows in rows_by_preset.items()}


def build_instance(
    segments: Sequence[SegmentFeatures],
    grid: OperatingGrid,
    time_models: Mapping[Preset, TimeModel],
    cluster_models: Mapping[Preset, ClusterModel],
    rd_classifiers: Mapping[Preset, RDClassModel],
) -> PlanningInstance:
    """Predicted (utility, rate, time) matrices for every segment and grid point.

    The time model of a point's preset gives the time; the classifier of
    that preset picks an R-D cluster whose fitted centroid, evaluated at the
    point's bitrate, gives the utility.
    """
    ModelSet(dict(cluster_models), dict(time_models), dict(rd_classifiers)).check_covers(grid)
    if not segments:
        raise ValidationError("no segments to plan")
    L, nb = len(segments), len(grid.bitrates_kbps)
    utility = np.empty((L, len(grid)))
    time = np.empty((L, len(grid)))
    rate = np.tile(np.array([pt.bitrate_kbps for pt in grid.points], dtype=float), (L, 1))
    for p_idx, preset in enumerate(grid.presets):
        cols = slice(p_idx * nb, (p_idx + 1) * nb)
        time[:, cols] = predict_times(time_models[preset], segments, grid.bitrates_kbps)
        classes = rd_classifiers[preset].predict(segments)
        fitted = cluster_models[preset].fitted
        for i, c in enumerate(classes):
            utility[i, cols] = [eval_curve(fitted[int(c)], b) for b in grid.bitrates_kbps]
    return PlanningInstance(utility, rate, time, grid, tuple(s.segment_id for s in segments))


def build_models_from_corpus(
    corpus,
    k: int = 6,
    seed: int = 0,
    gbdt: GBDTParams | None = None,
    svm: SVMParams | None = None,
    feature_names: Mapping[Preset, Sequence[str]] | None = None,
) -> ModelSet:
    """Cluster, label, and train everything from a synthetic corpus."""
    cluster_models, labels = fit_cluster_models(corpus.curves_by_preset(), k=k, seed=seed)
    time_models = fit_time_models(corpus.time_rows_by_preset(), gbdt, feature_names)
    classifiers = fit_rd_classifiers(corpus.rd_rows(labels), svm)
    return ModelSet(cluster_models, time_models, classifiers)
