import dataclasses
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from presetopt.core import (
    FEATURE_NAMES,
    FEATURE_USAGE,
    DEFAULT_BITRATES_KBPS,
    DEFAULT_BUDGETS,
    DEFAULT_PRESETS,
    Budgets,
    FeatureMask,
    Preset,
    SegmentFeatures,
    ValidationError,
    build_operating_grid,
    derive_time_threshold,
    default_grid,
)
from presetopt.synth import gen_corpus


def test_preset_has_five_members_with_bijective_ranks():
    assert len(Preset) == 5
    ranks = [p.speed_rank for p in Preset]
    assert sorted(ranks) == [0, 1, 2, 3, 4]
    assert Preset.ULTRAFAST.speed_rank == 0 and Preset.VERYSLOW.speed_rank == 4
    for p in Preset:
        assert Preset.parse(p.label) is p
        assert Preset(p.speed_rank) is p


def test_preset_parse_rejects_unknown_names():
    with pytest.raises(ValidationError):
        Preset.parse("medium")


def test_default_grid_has_fifty_points():
    grid = default_grid()
    assert len(grid) == 50
    assert grid.presets == DEFAULT_PRESETS
    assert grid.bitrates_kbps == DEFAULT_BITRATES_KBPS


def test_singleton_grid():
    grid = build_operating_grid([Preset.FAST], [1000])
    assert len(grid) == 1
    assert grid[0].index_j == 0
    assert (grid[0].preset, grid[0].bitrate_kbps) == (Preset.FAST, 1000)


def test_grid_is_preset_major():
    grid = build_operating_grid(["slow", "fast"], [100, 200, 300])
    assert [p.index_j for p in grid.points] == list(range(6))
    assert (grid[4].preset, grid[4].bitrate_kbps) == (Preset.FAST, 200)


@pytest.mark.parametrize(
    "presets, rates",
    [(["fast", "fast"], [100]), (["fast"], [100, 100]), ([], [100]), (["fast"], [])],
)
def test_grid_rejects_duplicates_and_empty_lists(presets, rates):
    with pytest.raises(ValidationError):
        build_operating_grid(presets, rates)


def test_index_of_off_grid_point_raises():
    with pytest.raises(ValidationError):
        default_grid().index_of(Preset.FAST, 1234)


@settings(max_examples=60, deadline=None)
@given(
    presets=st.lists(st.sampled_from(list(Preset)), min_size=1, max_size=5, unique=True),
    rates=st.lists(st.integers(1, 20000), min_size=1, max_size=12, unique=True),
)
def test_grid_index_round_trips(presets, rates):
    grid = build_operating_grid(presets, rates)
    assert len(grid) == len(presets) * len(rates)
    for j, pt in enumerate(grid.points):
        assert pt.index_j == j
        assert grid.index_of(pt.preset, pt.bitrate_kbps) == j


def test_derive_time_threshold_examples():
    assert derive_time_threshold(6, 2.0, 0.04) == pytest.approx(11.76, abs=1e-12)
    assert derive_time_threshold(1, 2.0, 0.0) == 2.0
    with pytest.raises(ValidationError):
        derive_time_threshold(6, 2.0, 2.0)


def test_feature_mask_tallies():
    mask = FeatureMask()
    assert len(FEATURE_NAMES) == 25
    assert len(mask.time_features) == 20
    assert len(mask.rd_features) == 11
    assert "mv_mean" in mask.time_features and "mv_mean" in mask.rd_features
    assert "mb_16x16" in mask.time_features and "mb_16x16" not in mask.rd_features
    for name in ("skip_ratio_b", "skip_ratio_p", "avg_qp_y_p", "avg_qp_y_b", "avg_qp_y_i"):
        assert FEATURE_USAGE[name] == (False, True)


def test_feature_mask_length_checked():
    with pytest.raises(ValidationError):
        FeatureMask(use_for_time=(True,) * 3)


def _features(**over):
    base = gen_corpus(seed=1, num_segments=1).features[0]
    return dataclasses.replace(base, **over)


@pytest.mark.parametrize(
    "field, value",
    [("i_mb", -1.0), ("skip_ratio_b", 1.5), ("skip_ratio_p", -0.1), ("width", 0),
     ("height", -4), ("duration_s", 0.0), ("mv_mean", math.nan)],
)
def test_segment_features_invariants(field, value):
    with pytest.raises(ValidationError):
        _features(**{field: value})


def test_segment_features_round_trip_and_value_semantics():
    f = _features()
    again = SegmentFeatures.from_dict(f.to_dict())
    assert again == f
    assert hash(again) == hash(f)
    assert f.duration_s == 2.0


def test_segment_features_from_dict_requires_every_feature():
    d = _features().to_dict()
    del d["mv_count"]
    with pytest.raises(ValidationError, match="mv_count"):
        SegmentFeatures.from_dict(d)


def test_budgets():
    assert DEFAULT_BUDGETS == Budgets(30000.0, 11.0)
    with pytest.raises(ValidationError):
        Budgets(0.0, 1.0)
    with pytest.raises(ValidationError):
        Budgets(1.0, -1.0)
    u = Budgets.unconstrained()
    assert math.isinf(u.rate_threshold_kbps) and math.isinf(u.time_threshold_s)
