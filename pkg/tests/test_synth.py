import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from presetopt.core import DEFAULT_BITRATES_KBPS, DEFAULT_PRESETS, Preset
from presetopt.synth import ARCHETYPES, gen_corpus, make_segment


def test_single_segment_shape():
    corpus = gen_corpus(seed=7, num_segments=1)
    assert len(corpus.segments) == 1
    assert len(corpus.time_rows) == 50
    assert len(corpus.rd_records) == 5
    assert {p for _, p, _ in corpus.rd_records} == set(DEFAULT_PRESETS)
    for _, _, curve in corpus.rd_records:
        assert curve.bitrates_kbps == tuple(float(b) for b in DEFAULT_BITRATES_KBPS)


def test_determinism_under_seed():
    a, b = gen_corpus(seed=11, num_segments=20), gen_corpus(seed=11, num_segments=20)
    assert a == b
    assert gen_corpus(seed=12, num_segments=20) != a


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        gen_corpus(num_segments=0)
    with pytest.raises(ValueError):
        gen_corpus(num_segments=3, complexity_mix={"opera": 1.0})


def test_complexity_mix_restricts_archetypes():
    corpus = gen_corpus(seed=2, num_segments=30, complexity_mix={"sports": 1.0})
    assert all(s.archetype == "sports" for s in corpus.segments)
    assert len(corpus.by_archetype("sports")) == 30


def test_motion_vector_mean_rises_with_complexity():
    rng = np.random.default_rng(0)
    low = [make_segment(rng, f"l{i}", "lecture").features.mv_mean for i in range(40)]
    high = [make_segment(rng, f"h{i}", "sports").features.mv_mean for i in range(40)]
    assert max(low) < min(high)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), arch=st.sampled_from(sorted(ARCHETYPES)),
       hard=st.booleans())
def test_segment_invariants(seed, arch, hard):
    seg = make_segment(np.random.default_rng(seed), "s", arch, hard=hard)
    for p in DEFAULT_PRESETS:
        psnr = [seg.true_psnr(p, b) for b in DEFAULT_BITRATES_KBPS]
        times = [seg.true_time(p, b) for b in DEFAULT_BITRATES_KBPS]
        if not hard:
            assert all(y > x for x, y in zip(psnr, psnr[1:]))
        assert all(y > x for x, y in zip(times, times[1:]))
        assert all(0 < t <= 4.0 for t in times)
    for b in DEFAULT_BITRATES_KBPS:
        fast_to_slow = sorted(DEFAULT_PRESETS, key=lambda p: p.speed_rank)
        t = [seg.true_time(p, b) for p in fast_to_slow]
        q = [seg.true_psnr(p, b) for p in fast_to_slow]
        assert all(y > x for x, y in zip(t, t[1:]))  # slower preset takes longer
        assert all(y >= x for x, y in zip(q, q[1:]))  # and never loses PSNR


def test_measured_times_positive_and_bounded():
    corpus = gen_corpus(seed=5, num_segments=40)
    times = np.array([r.transcode_time_s for r in corpus.time_rows])
    assert np.all(times > 0) and np.all(times <= 4.0)
    assert corpus.time_rows_by_preset()[Preset.VERYSLOW][0].preset is Preset.VERYSLOW
