"""Domain types shared across the package and the operating-point grid."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Sequence


class ValidationError(ValueError):
    """Raised when inputs violate a domain invariant."""


class Preset(enum.Enum):
    """x264-style speed presets; the value is the speed rank (0 = fastest)."""

    ULTRAFAST = 0
    VERYFAST = 1
    FAST = 2
    SLOW = 3
    VERYSLOW = 4

    @property
    def speed_rank(self) -> int:
        return self.value

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, name: str | "Preset") -> "Preset":
        if isinstance(name, Preset):
            return name
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValidationError(f"unknown preset {name!r}") from None

    def __str__(self) -> str:
        return self.label


DEFAULT_PRESETS: tuple[Preset, ...] = (
    Preset.VERYSLOW,
    Preset.SLOW,
    Preset.FAST,
    Preset.VERYFAST,
    Preset.ULTRAFAST,
)
DEFAULT_BITRATES_KBPS: tuple[int, ...] = (200, 400, 600, 800, 1000, 2000, 3000, 4000, 5000, 6000)


@dataclass(frozen=True)
class OperatingPoint:
    preset: Preset
    bitrate_kbps: int
    index_j: int


@dataclass(frozen=True)
class OperatingGrid:
    presets: tuple[Preset, ...]
    bitrates_kbps: tuple[int, ...]
    points: tuple[OperatingPoint, ...]

    @property
    def size(self) -> int:
        return len(self.points)

    def index_of(self, preset: Preset | str, bitrate_kbps: int) -> int:
        """Return j for ``(preset, bitrate)``; raises if the pair is not on the grid."""
        preset = Preset.parse(preset)
        try:
            p = self.presets.index(preset)
            r = self.bitrates_kbps.index(int(bitrate_kbps))
        except ValueError:
            raise ValidationError(
                f"operating point ({preset}, {bitrate_kbps}) is not on the grid"
            ) from None
        return p * len(self.bitrates_kbps) + r

    def __getitem__(self, j: int) -> OperatingPoint:
        return self.points[j]

    def __len__(self) -> int:
        return len(self.points)


def build_operating_grid(
    presets: Sequence[Preset | str], bitrates_kbps: Sequence[int]
) -> OperatingGrid:
    """Cross presets with bitrates, preset-major, so ``j = p * |R| + r``."""
    presets = tuple(Preset.parse(p) for p in presets)
    bitrates = tuple(int(b) for b in bitrates_kbps)
    if not presets or not bitrates:
        raise ValidationError("preset and bitrate lists must be non-empty")
    if len(set(presets)) != len(presets):
        raise ValidationError(f"duplicate presets in {[str(p) for p in presets]}")
    if len(set(bitrates)) != len(bitrates):
        raise ValidationError(f"duplicate bitrates in {list(bitrates)}")
    if any(b <= 0 for b in bitrates):
        raise ValidationError("bitrates must be positive")
    points = tuple(
        OperatingPoint(p, b, i * len(bitrates) + k)
        for i, p in enumerate(presets)
        for k, b in enumerate(bitrates)
    )
    return OperatingGrid(presets, bitrates, points)


def default_grid() -> OperatingGrid:
    return build_operating_grid(DEFAULT_PRESETS, DEFAULT_BITRATES_KBPS)


def derive_time_threshold(
    num_segments: int, segment_duration_s: float, overhead_s: float
) -> float:
    """Transcoding time available for a window of segments.

    Each segment must be transcoded within its own playback duration minus
    the prediction and optimization overhead.
    """
    if num_segments <= 0 or segment_duration_s <= 0 or overhead_s < 0:
        raise ValidationError("num_segments and duration must be positive, overhead >= 0")
    if overhead_s >= segment_duration_s:
        raise ValidationError(
            f"overhead {overhead_s}s leaves no transcoding time in a {segment_duration_s}s segment"
        )
    return num_segments * (segment_duration_s - overhead_s)


# Codes for the categorical colour fields (FFmpeg enum ordinals, "unknown" = 0).
COLOR_CODE_TABLE: dict[str, dict[str, int]] = {
    "color_range": {"unknown": 0, "tv": 1, "pc": 2},
    "color_space": {"unknown": 0, "bt709": 1, "bt470bg": 5, "smpte170m": 6, "bt2020nc": 9},
    "color_primaries": {"unknown": 0, "bt709": 1, "bt470bg": 5, "smpte170m": 6, "bt2020": 9},
    "color_transfer": {
        "unknown": 0, "bt709": 1, "smpte170m": 6, "bt2020-10": 14, "smpte2084": 16, "arib-std-b67": 18,
    },
}

# name -> (used for time, used for R-D)
FEATURE_USAGE: dict[str, tuple[bool, bool]] = {
    "pict_type_B": (True, True),
    "pict_type_P": (True, True),
    "i_mb": (True, True),
    "p_mb": (True, True),
    "b_mb": (True, True),
    "s_mb": (True, False),
    "mb_16x16": (True, False),
    "mb_16x8": (True, False),
    "mb_8x16": (True, False),
    "mb_8x8": (True, False),
    "mb_4x4": (True, False),
    "sar": (True, False),
    "skip_ratio_b": (False, True),
    "skip_ratio_p": (False, True),
    "avg_qp_y_p": (False, True),
    "avg_qp_y_b": (False, True),
    "avg_qp_y_i": (False, True),
    "mv_count": (True, False),
    "mv_mean": (True, True),
    "color_range": (True, False),
    "color_space": (True, False),
    "color_primaries": (True, False),
    "color_transfer": (True, False),
    "width": (True, False),
    "height": (True, False),
}
FEATURE_NAMES: tuple[str, ...] = tuple(FEATURE_USAGE)

_COUNT_FIELDS = (
    "pict_type_B", "pict_type_P", "i_mb", "p_mb", "b_mb", "s_mb",
    "mb_16x16", "mb_16x8", "mb_8x16", "mb_8x8", "mb_4x4", "mv_count",
)
_RATIO_FIELDS = ("skip_ratio_b", "skip_ratio_p")


@dataclass(frozen=True)
class SegmentFeatures:
    """Per-segment header/metadata features; one field per extracted feature."""

    segment_id: str
    pict_type_B: float
    pict_type_P: float
    i_mb: float
    p_mb: float
    b_mb: float
    s_mb: float
    mb_16x16: float
    mb_16x8: float
    mb_8x16: float
    mb_8x8: float
    mb_4x4: float
    sar: float
    skip_ratio_b: float
    skip_ratio_p: float
    avg_qp_y_p: float
    avg_qp_y_b: float
    avg_qp_y_i: float
    mv_count: float
    mv_mean: float
    color_range: int
    color_space: int
    color_primaries: int
    color_transfer: int
    width: int
    height: int
    duration_s: float = 2.0

    def __post_init__(self) -> None:
        for name in FEATURE_NAMES:
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{self.segment_id}: feature {name} is not finite")
        for name in _COUNT_FIELDS:
            if getattr(self, name) < 0:
                raise ValidationError(f"{self.segment_id}: count {name} is negative")
        for name in _RATIO_FIELDS:
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError(f"{self.segment_id}: ratio {name} outside [0, 1]")
        if self.width <= 0 or self.height <= 0:
            raise ValidationError(f"{self.segment_id}: width and height must be positive")
        if not self.duration_s > 0:
            raise ValidationError(f"{self.segment_id}: duration_s must be positive")

    def vector(self, names: Iterable[str] = FEATURE_NAMES) -> list[float]:
        return [float(getattr(self, n)) for n in names]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SegmentFeatures":
        kwargs = {}
        for f in fields(cls):
            if f.name not in data:
                if f.name == "duration_s":
                    continue
                raise ValidationError(f"missing feature {f.name!r}")
            value = data[f.name]
            if f.name == "segment_id":
                kwargs[f.name] = str(value)
            elif f.name in ("color_range", "color_space", "color_primaries",
                            "color_transfer", "width", "height"):
                kwargs[f.name] = int(value)
            else:
                kwargs[f.name] = float(value)
        return cls(**kwargs)


@dataclass(frozen=True)
class FeatureMask:
    """Which features feed the time regressor and the R-D classifier."""

    use_for_time: tuple[bool, ...] = field(
        default_factory=lambda: tuple(t for t, _ in FEATURE_USAGE.values())
    )
    use_for_rd: tuple[bool, ...] = field(
        default_factory=lambda: tuple(r for _, r in FEATURE_USAGE.values())
    )

    def __post_init__(self) -> None:
        if len(self.use_for_time) != len(FEATURE_NAMES) or len(self.use_for_rd) != len(FEATURE_NAMES):
            raise ValidationError("mask length must match the feature list")

    @property
    def time_features(self) -> tuple[str, ...]:
        return tuple(n for n, on in zip(FEATURE_NAMES, self.use_for_time) if on)

    @property
    def rd_features(self) -> tuple[str, ...]:
        return tuple(n for n, on in zip(FEATURE_NAMES, self.use_for_rd) if on)


@dataclass(frozen=True)
class Budgets:
    rate_threshold_kbps: float
    time_threshold_s: float

    def __post_init__(self) -> None:
        if not (self.rate_threshold_kbps > 0 and self.time_threshold_s > 0):
            raise ValidationError("budgets must be strictly positive")

    @classmethod
    def unconstrained(cls) -> "Budgets":
        return cls(math.inf, math.inf)


DEFAULT_BUDGETS = Budgets(rate_threshold_kbps=30000.0, time_threshold_s=11.0)
