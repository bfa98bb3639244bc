"""Cross-validation, backward feature elimination, and regression metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np

from ..core import ValidationError

R = TypeVar("R")


@dataclass(frozen=True)
class RegressionMetrics:
    mae: float
    mse: float
    r2: float
    mape: float


def regression_metrics(predicted, actual, with_mape: bool = True) -> RegressionMetrics:
    p = np.asarray(predicted, dtype=float)
    a = np.asarray(actual, dtype=float)
    if p.shape != a.shape or p.ndim != 1 or len(a) == 0:
        raise ValidationError("predicted and actual must be equal-length non-empty vectors")
    err = p - a
    mae = float(np.mean(np.abs(err)))
    mse = float(np.mean(err**2))
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    ss_res = float(np.sum(err**2))
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        # constant target: perfect only if residuals vanish
        r2 = 1.0 if ss_res == 0 else -np.inf
    if with_mape:
        if np.any(a == 0):
            raise ValidationError("MAPE is undefined when an actual value is zero")
        mape = float(np.mean(np.abs(err / a)))
    else:
        mape = float("nan")
    return RegressionMetrics(mae, mse, float(r2), mape)


def mape(predicted, actual) -> float:
    return regression_metrics(predicted, actual).mape


def kfold_indices(n: int, k: int, seed: int = 0) -> list[np.ndarray]:
    """Seeded shuffle split into ``k`` folds whose sizes differ by at most one.

    The first ``n % k`` folds get the extra row.
    """
    if k < 2:
        raise ValidationError("k-fold needs k >= 2")
    if n < k:
        raise ValidationError(f"cannot split {n} rows into {k} folds")
    order = np.random.default_rng(seed).permutation(n)
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    bounds = np.cumsum([0] + sizes)
    return [order[bounds[i]:bounds[i + 1]] for i in range(k)]


@dataclass(frozen=True)
class CVResult:
    fold_scores: tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_scores))


def kfold_cv(
    rows: Sequence[R],
    k: int,
    seed: int,
    trainer: Callable[[list[R]], object],
    metric: Callable[[object, list[R]], float],
) -> CVResult:
    """Train on k-1 folds, score on the held-out fold, in fold order.

    ``trainer(train_rows)`` returns a model; ``metric(model, valid_rows)``
    returns that fold's score.
    """
    folds = kfold_indices(len(rows), k, seed)
    scores = []
    for i, valid in enumerate(folds):
        train_idx = np.concatenate([f for j, f in enumerate(folds) if j != i])
        model = trainer([rows[t] for t in sorted(train_idx)])
        scores.append(float(metric(model, [rows[t] for t in valid])))
    return CVResult(tuple(scores))


def rfecv(
    rows: Sequence[R],
    trainer: Callable[[list[R], list[int]], object],
    metric: Callable[[object, list[R]], float],
    folds: int = 5,
    n_features: int | None = None,
    seed: int = 0,
) -> list[int]:
    """Greedy backward elimination scored by mean k-fold CV loss (lower is better).

    ``trainer(train_rows, feature_indices)`` fits a model on a feature
    subset. Each step drops the feature whose removal yields the lowest loss;
    removals are accepted while the loss does not get worse, ties drop the
    highest index, and at least one feature is always kept.
    """
    if n_features is None:
        raise ValidationError("n_features is required")
    if n_features < 2:
        raise ValidationError("feature elimination needs at least two features")

    def score(selected: list[int]) -> float:
        return kfold_cv(rows, folds, seed, lambda tr: trainer(tr, selected), metric).mean

    selected = list(range(n_features))
    current = score(selected)
    while len(selected) > 1:
        best_loss, drop = None, None
        for f in reversed(selected):
            loss = score([g for g in selected if g != f])
            if best_loss is None or loss < best_loss:
                best_loss, drop = loss, f
        if best_loss > current:
            break
        selected.remove(drop)
        current = best_loss
    return selected
