"""Per-preset R-D class prediction with a degree-2 polynomial-kernel SVM."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core import FeatureMask, Preset, SegmentFeatures, ValidationError
from .svm import OneVsRestSVM, fit_one_vs_rest, polynomial_kernel

KERNEL_DEGREE = 2


@dataclass(frozen=True)
class RDRow:
    features: SegmentFeatures
    preset: Preset
    cluster_label: int

    def __post_init__(self) -> None:
        if self.cluster_label < 0:
            raise ValidationError("cluster labels are non-negative")


@dataclass(frozen=True)
class SVMParams:
    C: float = 1.0
    tol: float = 1e-3
    max_passes: int = 100


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        std = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(std > 0, std, 1.0))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std

    def inverse(self, Z: np.ndarray) -> np.ndarray:
        return Z * self.std + self.mean


@dataclass(frozen=True)
class RDClassModel:
    preset: Preset
    feature_names: tuple[str, ...]
    scaler: Standardizer
    gamma: float
    svm: OneVsRestSVM
    params: SVMParams

    @property
    def classes(self) -> tuple[int, ...]:
        return self.svm.classes

    def scores(self, features: Sequence[SegmentFeatures]) -> np.ndarray:
        return self.svm.scores(self._matrix(features))

    def predict(self, features: Sequence[SegmentFeatures]) -> np.ndarray:
        return self.svm.predict(self._matrix(features))

    def _matrix(self, features: Sequence[SegmentFeatures]) -> np.ndarray:
        X = np.array([f.vector(self.feature_names) for f in features], dtype=float)
        return self.scaler.transform(X.reshape(len(features), len(self.feature_names)))


def train_rd_classifier(
    rows: Sequence[RDRow],
    params: SVMParams | None = None,
    feature_names: Sequence[str] | None = None,
) -> RDClassModel:
    """One-vs-rest SVMs on z-scored R-D features, kernel ``(x.x'/dim + 1)^2``.

    A single-class dataset yields a model that always answers that class.
    """
    if not rows:
        raise ValidationError("cannot train a classifier on an empty dataset")
    presets = {r.preset for r in rows}
    if len(presets) > 1:
        raise ValidationError(f"rows mix presets {sorted(str(p) for p in presets)}")
    params = params or SVMParams()
    names = tuple(feature_names) if feature_names is not None else FeatureMask().rd_features
    X = np.array([r.features.vector(names) for r in rows], dtype=float).reshape(len(rows), len(names))
    labels = np.array([r.cluster_label for r in rows])
    scaler = Standardizer.fit(X)
    gamma = 1.0 / len(names)
    svm = fit_one_vs_rest(
        scaler.transform(X), labels, polynomial_kernel(gamma, KERNEL_DEGREE),
        C=params.C, tol=params.tol, max_iter=params.max_passes * max(len(rows), 100),
    )
    return RDClassModel(presets.pop(), names, scaler, gamma, svm, params)


def classify_rd(model: RDClassModel, features: SegmentFeatures) -> int:
    """Cluster id with the highest one-vs-rest score (lowest id on ties)."""
    return int(model.predict([features])[0])
