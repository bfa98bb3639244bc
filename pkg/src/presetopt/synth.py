"""Deterministic synthetic corpus of 2-second segments.

Every segment has two latent traits, motion complexity and spatial detail,
drawn from a content archetype. The traits drive the header features, the
ground-truth log R-D curve of each preset, and the ground-truth transcoding
time of each (preset, bitrate) pair. The structure is monotone by
construction: slower presets are slower and never worse in PSNR, PSNR rises
with bitrate, time rises with bitrate, and mean motion-vector magnitude rises
with complexity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import (
    COLOR_CODE_TABLE,
    DEFAULT_BITRATES_KBPS,
    DEFAULT_PRESETS,
    Preset,
    SegmentFeatures,
)
from .predictors.classify import RDRow
from .predictors.timing import TimeRow
from .rdmodel import LogCurve, RDCurve

# name -> (complexity band, frame size)
ARCHETYPES: dict[str, tuple[tuple[float, float], tuple[int, int]]] = {
    "lecture": ((0.05, 0.25), (1280, 720)),
    "news_clip": ((0.15, 0.35), (1280, 720)),
    "how_to": ((0.20, 0.40), (854, 480)),
    "vlog": ((0.25, 0.45), (1280, 720)),
    "animation": ((0.30, 0.50), (854, 480)),
    "lyric_video": ((0.30, 0.50), (640, 360)),
    "cover_song": ((0.35, 0.55), (854, 480)),
    "television_clip": ((0.40, 0.60), (1280, 720)),
    "live_music": ((0.50, 0.70), (1280, 720)),
    "gaming": ((0.60, 0.85), (1920, 1080)),
    "sports": ((0.75, 0.95), (1920, 1080)),
}

# seconds at complexity 0, extra seconds at complexity 1 (before the frame-size factor)
_TIME_BASE = {
    Preset.ULTRAFAST: (0.20, 0.45),
    Preset.VERYFAST: (0.32, 0.60),
    Preset.FAST: (0.55, 0.85),
    Preset.SLOW: (0.95, 1.30),
    Preset.VERYSLOW: (1.40, 1.80),
}
# PSNR offset (dB) and slope multiplier per preset, both non-decreasing with slowness
_QUALITY = {
    Preset.ULTRAFAST: (-2.0, 0.97),
    Preset.VERYFAST: (0.0, 1.00),
    Preset.FAST: (0.9, 1.01),
    Preset.SLOW: (1.5, 1.02),
    Preset.VERYSLOW: (1.9, 1.03),
}
PSNR_NOISE_DB = 0.15
TIME_NOISE = 0.02
FPS = 30


@dataclass(frozen=True)
class SyntheticSegment:
    features: SegmentFeatures
    archetype: str
    complexity: float
    detail: float
    true_curves: dict[Preset, LogCurve]
    # seconds = base + per_kbps * bitrate
    time_coeffs: dict[Preset, tuple[float, float]]
    curvature: float = 0.0

    def true_psnr(self, preset: Preset, bitrate_kbps: float) -> float:
        c = self.true_curves[preset]
        x = math.log(bitrate_kbps)
        return c.a * x + c.b + self.curvature * (x - _LOG_MID) ** 2

    def true_time(self, preset: Preset, bitrate_kbps: float) -> float:
        base, slope = self.time_coeffs[preset]
        return base + slope * bitrate_kbps


_LOG_MID = float(np.mean(np.log(DEFAULT_BITRATES_KBPS)))


@dataclass(frozen=True)
class SyntheticCorpus:
    segments: tuple[SyntheticSegment, ...]
    time_rows: tuple[TimeRow, ...]
    rd_records: tuple[tuple[SegmentFeatures, Preset, RDCurve], ...]
    presets: tuple[Preset, ...] = DEFAULT_PRESETS
    bitrates_kbps: tuple[int, ...] = DEFAULT_BITRATES_KBPS
    seed: int = 0

    @property
    def features(self) -> list[SegmentFeatures]:
        return [s.features for s in self.segments]

    def curves_by_preset(self) -> dict[Preset, list[RDCurve]]:
        out: dict[Preset, list[RDCurve]] = {p: [] for p in self.presets}
        for _, preset, curve in self.rd_records:
            out[preset].append(curve)
        return out

    def time_rows_by_preset(self) -> dict[Preset, list[TimeRow]]:
        out: dict[Preset, list[TimeRow]] = {p: [] for p in self.presets}
        for row in self.time_rows:
            out[row.preset].append(row)
        return out

    def rd_rows(self, labels: Mapping[Preset, Sequence[int]]) -> dict[Preset, list[RDRow]]:
        """Pair each segment's features with its cluster label under each preset."""
        out: dict[Preset, list[RDRow]] = {}
        for preset in self.presets:
            feats = [f for f, p, _ in self.rd_records if p == preset]
            out[preset] = [RDRow(f, preset, int(c)) for f, c in zip(feats, labels[preset])]
        return out

    def by_archetype(self, archetype: str) -> list[SyntheticSegment]:
        return [s for s in self.segments if s.archetype == archetype]


def _features(
    rng: np.random.Generator,
    seg_id: str,
    complexity: float,
    detail: float,
    size: tuple[int, int],
    duration_s: float,
) -> SegmentFeatures:
    c, d = complexity, detail
    w, h = size
    frames = int(round(duration_s * FPS))
    jitter = lambda: 1.0 + rng.uniform(-0.03, 0.03)  # noqa: E731
    p_frames = int(round(frames * (0.45 + 0.2 * c)))
    b_frames = max(frames - p_frames - 1, 0)
    mbs = (w // 16) * (h // 16) * frames
    i_mb = mbs * (0.04 + 0.12 * c) * jitter()
    p_mb = mbs * (0.30 + 0.25 * c) * jitter()
    b_mb = mbs * (0.20 + 0.15 * c) * jitter()
    s_mb = mbs * (0.40 - 0.30 * c) * jitter()
    mb_4x4 = mbs * (0.02 + 0.18 * d) * jitter()
    mb_8x8 = mbs * (0.08 + 0.20 * d) * jitter()
    mb_8x16 = mbs * (0.05 + 0.08 * c) * jitter()
    mb_16x8 = mbs * (0.05 + 0.08 * c) * jitter()
    mb_16x16 = mbs * (0.70 - 0.30 * d - 0.10 * c) * jitter()
    return SegmentFeatures(
        segment_id=seg_id,
        pict_type_B=float(b_frames),
        pict_type_P=float(p_frames),
        i_mb=round(i_mb),
        p_mb=round(p_mb),
        b_mb=round(b_mb),
        s_mb=round(s_mb),
        mb_16x16=round(mb_16x16),
        mb_16x8=round(mb_16x8),
        mb_8x16=round(mb_8x16),
        mb_8x8=round(mb_8x8),
        mb_4x4=round(mb_4x4),
        sar=1.0,
        skip_ratio_b=float(np.clip(0.80 - 0.60 * c + rng.uniform(-0.03, 0.03), 0, 1)),
        skip_ratio_p=float(np.clip(0.65 - 0.50 * c + rng.uniform(-0.03, 0.03), 0, 1)),
        avg_qp_y_p=22.0 + 10.0 * d + 5.0 * c + rng.uniform(-0.4, 0.4),
        avg_qp_y_b=24.0 + 10.0 * d + 5.0 * c + rng.uniform(-0.4, 0.4),
        avg_qp_y_i=19.0 + 10.0 * d + 3.0 * c + rng.uniform(-0.4, 0.4),
        mv_count=round(mbs * (0.25 + 0.60 * c) * jitter()),
        mv_mean=2.0e5 + 6.0e5 * c + rng.uniform(-2.5e4, 2.5e4),
        color_range=COLOR_CODE_TABLE["color_range"]["tv"],
        color_space=COLOR_CODE_TABLE["color_space"]["bt709"],
        color_primaries=COLOR_CODE_TABLE["color_primaries"]["bt709"],
        color_transfer=COLOR_CODE_TABLE["color_transfer"]["bt709"],
        width=w,
        height=h,
        duration_s=duration_s,
    )


def make_segment(
    rng: np.random.Generator,
    seg_id: str,
    archetype: str,
    complexity: float | None = None,
    detail: float | None = None,
    hard: bool = False,
    duration_s: float = 2.0,
) -> SyntheticSegment:
    (lo, hi), size = ARCHETYPES[archetype]
    c = float(rng.uniform(lo, hi)) if complexity is None else float(complexity)
    d = float(rng.uniform(0.0, 1.0)) if detail is None else float(detail)
    feats = _features(rng, seg_id, c, d, size, duration_s)

    # complex content starts lower and gains more per doubling of rate
    a = 3.0 + 2.5 * c
    b = 28.0 - 22.0 * c - 6.0 * d
    curves = {p: LogCurve(a * _QUALITY[p][1], b + _QUALITY[p][0]) for p in DEFAULT_PRESETS}

    size_factor = 0.7 + 0.3 * (size[0] * size[1]) / (1920 * 1080)
    coeffs = {}
    for p in DEFAULT_PRESETS:
        b0, b1 = _TIME_BASE[p]
        slope = (0.015 + 0.02 * c) * (1.0 + 0.5 * p.speed_rank) / 1000.0
        coeffs[p] = (size_factor * (b0 + b1 * c), size_factor * slope)
    curvature = float(rng.uniform(-0.3, 0.0)) if hard else 0.0
    return SyntheticSegment(feats, archetype, c, d, curves, coeffs, curvature)


def gen_corpus(
    seed: int = 0,
    num_segments: int = 877,
    complexity_mix: Mapping[str, float] | None = None,
    hard: bool = False,
    presets: Sequence[Preset] = DEFAULT_PRESETS,
    bitrates_kbps: Sequence[int] = DEFAULT_BITRATES_KBPS,
    duration_s: float = 2.0,
) -> SyntheticCorpus:
    """Generate ``num_segments`` segments with measured R-D curves and timings.

    ``complexity_mix`` maps archetype names to sampling weights (default:
    uniform over all archetypes). Each segment yields one R-D curve per preset
    and one timing row per (preset, bitrate).
    """
    if num_segments < 1:
        raise ValueError("num_segments must be >= 1")
    rng = np.random.default_rng(seed)
    mix = dict(complexity_mix) if complexity_mix else {k: 1.0 for k in ARCHETYPES}
    unknown = set(mix) - set(ARCHETYPES)
    if unknown:
        raise ValueError(f"unknown archetypes {sorted(unknown)}")
    names = sorted(mix)
    weights = np.array([mix[n] for n in names], dtype=float)
    weights /= weights.sum()
    presets = tuple(presets)
    rates = tuple(int(b) for b in bitrates_kbps)

    segments, time_rows, rd_records = [], [], []
    for k in range(num_segments):
        archetype = names[int(rng.choice(len(names), p=weights))]
        seg = make_segment(rng, f"{archetype}-{k:05d}", archetype, hard=hard, duration_s=duration_s)
        segments.append(seg)
        for p in presets:
            psnr = [
                seg.true_psnr(p, r) + rng.uniform(-PSNR_NOISE_DB, PSNR_NOISE_DB) for r in rates
            ]
            rd_records.append((seg.features, p, RDCurve.from_arrays(rates, psnr)))
            for r in rates:
                t = seg.true_time(p, r) * (1.0 + rng.uniform(-TIME_NOISE, TIME_NOISE))
                time_rows.append(TimeRow(seg.features, p, r, t))
    return SyntheticCorpus(
        tuple(segments), tuple(time_rows), tuple(rd_records), presets, rates, seed
    )
