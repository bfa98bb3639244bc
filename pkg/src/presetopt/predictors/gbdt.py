"""Least-squares gradient-boosted regression trees.

Split search is histogram based: every feature is bucketed once into at most
``max_bins`` quantile bins and candidate thresholds sit between adjacent bin
values. Leaves hold the mean residual of their rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Tree:
    """Array-encoded binary tree. ``feature[n] == -1`` marks a leaf."""

    feature: tuple[int, ...]
    threshold: tuple[float, ...]
    left: tuple[int, ...]
    right: tuple[int, ...]
    value: tuple[float, ...]

    def predict_one(self, x) -> float:
        n = 0
        while self.feature[n] >= 0:
            n = self.left[n] if x[self.feature[n]] <= self.threshold[n] else self.right[n]
        return self.value[n]

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold)
        left, right = np.asarray(self.left), np.asarray(self.right)
        active = feature[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            f = feature[node[idx]]
            go_left = X[idx, f] <= threshold[node[idx]]
            node[idx] = np.where(go_left, left[node[idx]], right[node[idx]])
            active = feature[node] >= 0
        return np.asarray(self.value)[node]

    @property
    def depth(self) -> int:
        def walk(n: int) -> int:
            if self.feature[n] < 0:
                return 0
            return 1 + max(walk(self.left[n]), walk(self.right[n]))
        return walk(0)

    def to_dict(self) -> dict:
        return {
            "feature": list(self.feature),
            "threshold": list(self.threshold),
            "left": list(self.left),
            "right": list(self.right),
            "value": list(self.value),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            tuple(int(v) for v in d["feature"]),
            tuple(float(v) for v in d["threshold"]),
            tuple(int(v) for v in d["left"]),
            tuple(int(v) for v in d["right"]),
            tuple(float(v) for v in d["value"]),
        )


class _Binned:
    """Per-feature bin codes and the threshold that separates bin b from b+1."""

    def __init__(self, X: np.ndarray, max_bins: int):
        n, d = X.shape
        self.codes = np.empty((n, d), dtype=np.int32)
        self.cuts: list[np.ndarray] = []
        for f in range(d):
            uniq = np.unique(X[:, f])
            if len(uniq) > max_bins:
                qs = np.quantile(X[:, f], np.linspace(0, 1, max_bins + 1)[1:-1], method="lower")
                edges = np.unique(qs)
            else:
                edges = uniq[:-1]
            # rows with value <= edges[b] land in bin <= b
            self.codes[:, f] = np.searchsorted(edges, X[:, f], side="left")
            self.cuts.append(edges)
        self.n_bins = [len(c) + 1 for c in self.cuts]
        # codes shifted into a (feature, bin) table so one bincount covers every feature
        self.width = max(self.n_bins)
        self.flat_codes = self.codes + np.arange(d, dtype=np.int32) * self.width
        bins = np.arange(self.width)
        # a split after bin b is possible only if some bin follows it
        self.valid = bins[None, :] < (np.asarray(self.n_bins) - 1)[:, None]


def _fit_tree(
    binned: _Binned,
    residual: np.ndarray,
    max_depth: int,
    min_samples_leaf: int,
) -> tuple[Tree, np.ndarray]:
    """Grow one tree; also returns each training row's leaf value."""
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    d, width = len(binned.n_bins), binned.width
    fitted = np.empty(len(residual))

    def grow(node: int, rows: np.ndarray, depth: int) -> None:
        r = residual[rows]
        n = len(rows)
        total = r.sum()
        value[node] = float(total / n)
        fitted[rows] = value[node]
        if depth >= max_depth or n < 2 * min_samples_leaf:
            return
        parent_score = total * total / n
        codes = binned.flat_codes[rows]
        cnt = np.bincount(codes.ravel(), minlength=d * width).reshape(d, width).cumsum(axis=1)
        sm = np.bincount(
            codes.ravel(), weights=np.repeat(r, d), minlength=d * width
        ).reshape(d, width).cumsum(axis=1)
        ok = binned.valid & (cnt >= min_samples_leaf) & (n - cnt >= min_samples_leaf)
        if not ok.any():
            return
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = sm**2 / cnt + (total - sm) ** 2 / (n - cnt) - parent_score
        gain = np.where(ok, gain, -np.inf)
        # row-major first maximum: lowest feature index, then lowest threshold
        f, b = divmod(int(np.argmax(gain)), width)
        if not gain[f, b] > 1e-12 * max(1.0, abs(parent_score)):
            return
        mask = binned.codes[rows, f] <= b
        feature[node] = f
        threshold[node] = float(binned.cuts[f][b])
        lnode = new_node()
        rnode = new_node()
        left[node], right[node] = lnode, rnode
        grow(lnode, rows[mask], depth + 1)
        grow(rnode, rows[~mask], depth + 1)

    grow(new_node(), np.arange(len(residual)), 0)
    tree = Tree(tuple(feature), tuple(threshold), tuple(left), tuple(right), tuple(value))
    return tree, fitted


@dataclass(frozen=True)
class BoostedTrees:
    base_prediction: float
    learning_rate: float
    trees: tuple[Tree, ...]
    train_rmse: tuple[float, ...] = ()

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.full(len(X), self.base_prediction)
        for t in self.trees:
            out += self.learning_rate * t.predict(X)
        return out


def fit_boosted_trees(
    X: np.ndarray,
    y: np.ndarray,
    n_rounds: int = 200,
    max_depth: int = 4,
    learning_rate: float = 0.1,
    min_samples_leaf: int = 2,
    max_bins: int = 255,
) -> BoostedTrees:
    """Fit ``n_rounds`` depth-limited trees to successive least-squares residuals.

    ``train_rmse[n]`` is the training RMSE after ``n`` trees (entry 0 is the
    constant model). Boosting stops early once no split reduces the loss.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
        raise ValueError("X must be 2-D with one row per target")
    if not 0 < learning_rate <= 1:
        raise ValueError("learning_rate must lie in (0, 1]")
    binned = _Binned(X, max_bins)
    base = float(y.mean())
    pred = np.full(len(y), base)
    rmse = [float(np.sqrt(np.mean((y - pred) ** 2)))]
    trees: list[Tree] = []
    for _ in range(n_rounds):
        tree, leaf_values = _fit_tree(binned, y - pred, max_depth, min_samples_leaf)
        step = learning_rate * leaf_values
        new_pred = pred + step
        new_rmse = float(np.sqrt(np.mean((y - new_pred) ** 2)))
        if new_rmse >= rmse[-1]:
            break
        trees.append(tree)
        pred = new_pred
        rmse.append(new_rmse)
    return BoostedTrees(base, learning_rate, tuple(trees), tuple(rmse))
