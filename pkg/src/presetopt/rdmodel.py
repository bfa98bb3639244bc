"""Rate-distortion knowledge base: R-D curve clustering and centroid curves.

Curves are clustered per preset on their raw PSNR vectors. Each centroid is
summarised by a two-parameter log curve ``psnr = a * ln(kbps) + b`` whose
value at an operating point stands in for that segment's distortion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Preset, ValidationError


@dataclass(frozen=True)
class RDCurve:
    bitrates_kbps: tuple[float, ...]
    psnr_db: tuple[float, ...]

    def __post_init__(self) -> None:
        rates = np.asarray(self.bitrates_kbps, dtype=float)
        psnr = np.asarray(self.psnr_db, dtype=float)
        if rates.ndim != 1 or rates.shape != psnr.shape or len(rates) < 2:
            raise ValidationError("an R-D curve needs >= 2 (bitrate, psnr) pairs of equal length")
        if np.any(rates <= 0) or np.any(np.diff(rates) <= 0):
            raise ValidationError("curve bitrates must be positive and strictly increasing")
        if not np.all(np.isfinite(psnr)) or np.any(psnr <= 0):
            raise ValidationError("curve PSNR values must be finite and positive")

    @classmethod
    def from_arrays(cls, bitrates_kbps, psnr_db) -> "RDCurve":
        return cls(tuple(float(b) for b in bitrates_kbps), tuple(float(p) for p in psnr_db))

    @property
    def rates(self) -> np.ndarray:
        return np.asarray(self.bitrates_kbps, dtype=float)

    @property
    def psnr(self) -> np.ndarray:
        return np.asarray(self.psnr_db, dtype=float)


@dataclass(frozen=True)
class LogCurve:
    a: float
    b: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValidationError("log curve parameters must be finite")


@dataclass(frozen=True)
class ClusterModel:
    preset: Preset
    k: int
    bitrates_kbps: tuple[float, ...]
    centroids: np.ndarray  # (k, n_bitrates)
    fitted: tuple[LogCurve, ...]
    inertia: float
    seed: int
    inertia_history: tuple[float, ...] = field(default=(), compare=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ClusterModel):
            return NotImplemented
        return (
            self.preset == other.preset
            and self.k == other.k
            and self.bitrates_kbps == other.bitrates_kbps
            and np.array_equal(self.centroids, other.centroids)
            and self.fitted == other.fitted
            and self.inertia == other.inertia
            and self.seed == other.seed
        )

    __hash__ = None  # type: ignore[assignment]

    def utility(self, cluster: int, bitrate_kbps: float) -> float:
        return eval_curve(self.fitted[cluster], bitrate_kbps)


def _stack_curves(curves: Sequence[RDCurve]) -> tuple[tuple[float, ...], np.ndarray]:
    if not curves:
        raise ValidationError("no curves to cluster")
    grid = curves[0].bitrates_kbps
    for c in curves[1:]:
        if c.bitrates_kbps != grid:
            raise ValidationError("all curves must share one bitrate grid")
    return grid, np.array([c.psnr_db for c in curves], dtype=float)


def _sq_dists(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # explicit differences rather than the expanded dot-product form, so an
    # exact match yields exactly zero
    diff = X[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _kmeanspp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    centers = [X[rng.integers(n)]]
    closest = _sq_dists(X, centers[0][None, :])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            # every point already coincides with a centre; take the first unused row
            idx = next((i for i in range(n) if not any(np.array_equal(X[i], c) for c in centers)), 0)
        else:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers.append(X[idx])
        closest = np.minimum(closest, _sq_dists(X, X[idx][None, :])[:, 0])
    return np.array(centers, dtype=float)


def _assign(X: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = _sq_dists(X, centroids)
    labels = np.argmin(d, axis=1)  # first minimum -> lowest cluster id on ties
    return labels, d[np.arange(len(X)), labels]


def kmeans_cluster(
    curves: Sequence[RDCurve],
    k: int = 6,
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-6,
    preset: Preset = Preset.VERYFAST,
) -> tuple[ClusterModel, list[int]]:
    """Lloyd's k-means with k-means++ seeding on sampled PSNR vectors.

    Returns the fitted model and the cluster id of each input curve. The
    recorded ``inertia_history`` holds the inertia after every assignment
    step and never increases.
    """
    grid, X = _stack_curves(curves)
    if not 1 <= k <= len(X):
        raise ValidationError(f"k={k} must lie in [1, {len(X)}]")
    rng = np.random.default_rng(seed)

    centroids = _kmeanspp_init(X, k, rng)
    labels, d = _assign(X, centroids)
    history = [float(d.sum())]
    for _ in range(max_iter):
        new = centroids.copy()
        for c in range(k):
            members = X[labels == c]
            if len(members):
                # offsets from one member keep duplicate curves exact
                new[c] = members[0] + (members - members[0]).mean(axis=0)
        # refill empty clusters from the worst-served point
        for c in range(k):
            if not np.any(labels == c):
                far = int(np.argmax(d))
                new[c] = X[far]
                labels[far] = c
                d[far] = 0.0
        shift = float(np.sqrt(((new - centroids) ** 2).sum(axis=1)).max())
        centroids = new
        labels, d = _assign(X, centroids)
        history.append(float(d.sum()))
        if shift < tol:
            break

    fitted = tuple(fit_centroid(RDCurve(grid, tuple(row))) for row in centroids)
    model = ClusterModel(
        preset=preset,
        k=k,
        bitrates_kbps=grid,
        centroids=centroids,
        fitted=fitted,
        inertia=history[-1],
        seed=seed,
        inertia_history=tuple(history),
    )
    return model, [int(v) for v in labels]


def fit_centroid(points: RDCurve) -> LogCurve:
    """Least-squares fit of ``psnr = a*ln(kbps) + b`` from the 2x2 normal equations."""
    x = np.log(np.asarray(points.bitrates_kbps, dtype=float))
    y = np.asarray(points.psnr_db, dtype=float)
    n = len(x)
    if n < 2:
        raise ValidationError("need at least two points to fit a curve")
    xm = x.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0.0:
        raise ValidationError("cannot fit a curve through identical bitrates")
    ym = y.mean()
    a = float(((x - xm) * (y - ym)).sum() / sxx)
    b = float(ym - a * xm)
    return LogCurve(a, b)


def eval_curve(curve: LogCurve, bitrate_kbps: float) -> float:
    if not bitrate_kbps > 0:
        raise ValidationError(f"bitrate must be positive, got {bitrate_kbps}")
    return curve.a * math.log(bitrate_kbps) + curve.b


def assign_cluster(curve: RDCurve, model: ClusterModel) -> int:
    """Nearest centroid by Euclidean distance; ties go to the lowest id."""
    if curve.bitrates_kbps != model.bitrates_kbps:
        raise ValidationError("curve grid does not match the cluster model grid")
    d = _sq_dists(curve.psnr[None, :], model.centroids)[0]
    return int(np.argmin(d))


def cluster_per_preset(
    curves_by_preset: dict[Preset, Sequence[RDCurve]],
    k: int = 6,
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> tuple[dict[Preset, ClusterModel], dict[Preset, list[int]]]:
    models, labels = {}, {}
    for preset, curves in curves_by_preset.items():
        models[preset], labels[preset] = kmeans_cluster(
            curves, k=k, seed=seed, max_iter=max_iter, tol=tol, preset=preset
        )
    return models, labels
