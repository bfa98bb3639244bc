import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from presetopt.core import DEFAULT_BITRATES_KBPS, Preset, ValidationError
from presetopt.rdmodel import (
    LogCurve,
    RDCurve,
    assign_cluster,
    cluster_per_preset,
    eval_curve,
    fit_centroid,
    kmeans_cluster,
)
from presetopt.synth import gen_corpus

GRID = tuple(float(b) for b in DEFAULT_BITRATES_KBPS)


def _curve(a: float, b: float, noise=None) -> RDCurve:
    psnr = [a * math.log(r) + b for r in GRID]
    if noise is not None:
        psnr = [p + e for p, e in zip(psnr, noise)]
    return RDCurve(GRID, tuple(psnr))


# --------------------------------------------------------------------- RDCurve


@pytest.mark.parametrize(
    "rates, psnr",
    [((100.0,), (30.0,)), ((100.0, 100.0), (30.0, 31.0)), ((200.0, 100.0), (30.0, 31.0)),
     ((100.0, 200.0), (30.0,)), ((100.0, 200.0), (30.0, -1.0)), ((0.0, 200.0), (30.0, 31.0))],
)
def test_rdcurve_validation(rates, psnr):
    with pytest.raises(ValidationError):
        RDCurve(rates, psnr)


# --------------------------------------------------------------------- fitting


def test_fit_recovers_exact_log_curve():
    fit = fit_centroid(_curve(5.0, 10.0))
    assert fit.a == pytest.approx(5.0, abs=1e-9)
    assert fit.b == pytest.approx(10.0, abs=1e-9)


def test_fit_flat_curve():
    fit = fit_centroid(RDCurve(GRID, (40.0,) * len(GRID)))
    assert fit.a == pytest.approx(0.0, abs=1e-12)
    assert fit.b == pytest.approx(40.0, abs=1e-12)


def test_fit_matches_normal_equations_oracle():
    rng = np.random.default_rng(11)
    curve = _curve(4.0, 12.0, rng.normal(0, 0.4, len(GRID)))
    x = np.log(np.array(GRID))
    A = np.column_stack([x, np.ones_like(x)])
    a, b = np.linalg.solve(A.T @ A, A.T @ curve.psnr)
    fit = fit_centroid(curve)
    assert fit.a == pytest.approx(a, abs=1e-9)
    assert fit.b == pytest.approx(b, abs=1e-9)


def test_fit_rejects_identical_bitrates():
    # RDCurve itself rejects repeated rates, so the guard is the curve constructor
    with pytest.raises(ValidationError):
        fit_centroid(RDCurve((100.0, 100.0), (30.0, 31.0)))


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(20.0, 60.0, allow_nan=False), min_size=10, max_size=10),
)
def test_fit_is_a_local_least_squares_optimum(psnr):
    curve = RDCurve(GRID, tuple(psnr))
    fit = fit_centroid(curve)
    x = np.log(np.array(GRID))

    def ssr(a, b):
        return float(((a * x + b - curve.psnr) ** 2).sum())

    base = ssr(fit.a, fit.b)
    for ang in np.linspace(0, 2 * np.pi, 16, endpoint=False):
        da, db = 1e-3 * math.cos(ang), 1e-3 * math.sin(ang)
        assert ssr(fit.a + da, fit.b + db) >= base - 1e-9 * max(1.0, base)


# --------------------------------------------------------------------- evaluation


def test_eval_curve_examples():
    assert eval_curve(LogCurve(0.0, 40.0), 1234.0) == 40.0
    assert eval_curve(LogCurve(5.0, 10.0), math.e) == pytest.approx(15.0, abs=1e-12)
    # frozen from a 50-digit evaluation of 4.2*ln(1000)+8
    assert eval_curve(LogCurve(4.2, 8.0), 1000) == pytest.approx(37.01257217172497561862669, abs=1e-12)


@pytest.mark.parametrize("bitrate", [0.0, -5.0])
def test_eval_curve_rejects_non_positive_bitrate(bitrate):
    with pytest.raises(ValidationError):
        eval_curve(LogCurve(1.0, 1.0), bitrate)


def test_log_curve_must_be_finite():
    with pytest.raises(ValidationError):
        LogCurve(math.inf, 0.0)


# --------------------------------------------------------------------- k-means


def test_k1_centroid_is_pointwise_mean():
    rng = np.random.default_rng(2)
    curves = [_curve(rng.uniform(3, 6), rng.uniform(5, 20)) for _ in range(30)]
    model, labels = kmeans_cluster(curves, k=1, seed=0)
    mean = np.mean([c.psnr for c in curves], axis=0)
    np.testing.assert_allclose(model.centroids[0], mean, atol=1e-9, rtol=0)
    assert labels == [0] * 30


def test_two_groups_of_duplicates():
    a, b = _curve(4.0, 10.0), _curve(5.0, 2.0)
    model, labels = kmeans_cluster([a, b, a, b, a], k=2, seed=5)
    found = sorted(tuple(row) for row in model.centroids)
    assert found == sorted([a.psnr_db, b.psnr_db])
    assert model.inertia == 0.0
    assert labels[0] == labels[2] == labels[4] != labels[1] == labels[3]


def _best_partition_bruteforce(X: np.ndarray, k: int):
    n = len(X)
    labelings = np.array(list(itertools.product(range(k), repeat=n)), dtype=np.int8)
    total_sq = float((X**2).sum())
    sse = np.full(len(labelings), total_sq)
    valid = np.ones(len(labelings), dtype=bool)
    for c in range(k):
        mask = (labelings == c).astype(float)
        cnt = mask.sum(axis=1)
        valid &= cnt > 0
        sums = mask @ X
        with np.errstate(divide="ignore", invalid="ignore"):
            sse -= np.where(cnt > 0, (sums**2).sum(axis=1) / cnt, 0.0)
    best = int(np.argmin(np.where(valid, sse, np.inf)))
    return labelings[best], float(sse[best])


def _as_partition(labels) -> set:
    groups: dict = {}
    for i, c in enumerate(labels):
        groups.setdefault(int(c), set()).add(i)
    return {frozenset(g) for g in groups.values()}


def test_kmeans_matches_exhaustive_partition_on_three_bands():
    rng = np.random.default_rng(4)
    curves = []
    for band in (24.0, 30.0, 36.0):
        for _ in range(4):
            curves.append(_curve(4.0, band, rng.normal(0, 0.6, len(GRID))))
    order = rng.permutation(12)
    curves = [curves[i] for i in order]
    X = np.array([c.psnr for c in curves])
    oracle_labels, oracle_sse = _best_partition_bruteforce(X, 3)
    model, labels = kmeans_cluster(curves, k=3, seed=0)
    assert _as_partition(labels) == _as_partition(oracle_labels)
    assert model.inertia == pytest.approx(oracle_sse, rel=1e-9)


def test_kmeans_errors():
    with pytest.raises(ValidationError):
        kmeans_cluster([_curve(4, 10)], k=2)
    other = RDCurve((100.0, 200.0), (30.0, 32.0))
    with pytest.raises(ValidationError):
        kmeans_cluster([_curve(4, 10), other], k=1)
    with pytest.raises(ValidationError):
        kmeans_cluster([], k=1)


def test_kmeans_inertia_history_and_final_inertia():
    corpus = gen_corpus(seed=8, num_segments=120)
    curves = corpus.curves_by_preset()[Preset.FAST]
    model, labels = kmeans_cluster(curves, k=6, seed=1)
    hist = model.inertia_history
    assert all(b <= a for a, b in zip(hist, hist[1:]))
    X = np.array([c.psnr for c in curves])
    direct = float(((X - model.centroids[labels]) ** 2).sum())
    assert model.inertia == pytest.approx(direct, rel=1e-12)
    for c, fit in enumerate(model.fitted):
        assert fit == fit_centroid(RDCurve(model.bitrates_kbps, tuple(model.centroids[c])))


def test_kmeans_deterministic_under_seed():
    curves = gen_corpus(seed=9, num_segments=60).curves_by_preset()[Preset.SLOW]
    first, l1 = kmeans_cluster(curves, k=5, seed=3)
    second, l2 = kmeans_cluster(curves, k=5, seed=3)
    assert first == second and l1 == l2
    assert first.inertia_history == second.inertia_history


def test_empty_cluster_reseeded_from_farthest_point():
    # five identical curves and one outlier force k-means++ to duplicate centres
    a = _curve(4.0, 10.0)
    far = _curve(4.0, 30.0)
    model, labels = kmeans_cluster([a] * 5 + [far], k=2, seed=0)
    assert sorted(tuple(r) for r in model.centroids) == sorted([a.psnr_db, far.psnr_db])
    assert model.inertia == 0.0


# --------------------------------------------------------------------- assignment


def _model_with_centroids(rows):
    curves = [RDCurve(GRID, tuple(r)) for r in rows]
    model, _ = kmeans_cluster(curves, k=len(rows), seed=0)
    return model


def test_assign_cluster_zero_distance_and_ties():
    model = _model_with_centroids([[30.0 + i] * 10 for i in range(5)])
    for c in range(model.k):
        assert assign_cluster(RDCurve(GRID, tuple(model.centroids[c])), model) == c
    # equidistant between the centroids at 31 and 32 -> the lower id among them
    ids = {float(model.centroids[c][0]): c for c in range(model.k)}
    mid = RDCurve(GRID, (31.5,) * 10)
    assert assign_cluster(mid, model) == min(ids[31.0], ids[32.0])


def test_assign_cluster_matches_linear_scan():
    rng = np.random.default_rng(6)
    curves = [_curve(rng.uniform(3, 6), rng.uniform(0, 25)) for _ in range(40)]
    model, _ = kmeans_cluster(curves, k=6, seed=2)
    for _ in range(50):
        probe = _curve(rng.uniform(3, 6), rng.uniform(0, 25))
        dists = [sum((p - q) ** 2 for p, q in zip(probe.psnr_db, row)) for row in model.centroids]
        best = min(range(len(dists)), key=lambda c: (dists[c], c))
        assert assign_cluster(probe, model) == best


def test_assign_cluster_grid_mismatch():
    model = _model_with_centroids([[30.0] * 10, [40.0] * 10])
    with pytest.raises(ValidationError):
        assign_cluster(RDCurve((1.0, 2.0), (30.0, 31.0)), model)


def test_preset_quality_ordering_on_synthetic_corpus():
    corpus = gen_corpus(seed=12, num_segments=150)
    models, _ = cluster_per_preset(corpus.curves_by_preset(), k=6, seed=0)
    slow = models[Preset.VERYSLOW].centroids.mean(axis=0)
    fast = models[Preset.ULTRAFAST].centroids.mean(axis=0)
    assert np.all(slow >= fast)
