"""Fixed-preset baselines, plan summaries, BD-rate, and budget sweeps."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    DEFAULT_BITRATES_KBPS,
    Budgets,
    OperatingGrid,
    Preset,
    SegmentFeatures,
    ValidationError,
)
from .pipeline import ModelSet, build_instance
from .rdmodel import RDCurve
from .solver import FEASIBLE, INFEASIBLE, PlanningInstance, Solution, sequential_totals, solve_bb

BASELINE1 = (Preset.FAST, 5000)
BASELINE2 = (Preset.VERYFAST, 5000)
DEFAULT_TIME_AXIS_S = (11.0, 8.0, 5.0, 3.0)
SUMMARY_TOL = 1e-9


def default_rate_axis(num_segments: int = 6, bitrates_kbps: Sequence[int] | None = None) -> tuple[float, ...]:
    return tuple(float(num_segments * b) for b in (bitrates_kbps or DEFAULT_BITRATES_KBPS))


def baseline_plan(
    instance: PlanningInstance,
    preset: Preset | str,
    bitrate_kbps: int,
    budgets: Budgets | None = None,
) -> Solution:
    """Give every segment the same operating point.

    Without budgets the status is ``feasible``; with budgets it is
    ``feasible`` or ``infeasible`` and the totals are reported either way.
    """
    if instance.grid is None:
        raise ValidationError("baseline plans need an instance built on a grid")
    j = instance.grid.index_of(preset, bitrate_kbps)
    choice = (j,) * instance.num_segments
    u, r, t = sequential_totals(instance, choice)
    ok = budgets is None or (r <= budgets.rate_threshold_kbps and t <= budgets.time_threshold_s)
    return Solution(choice, u, r, t, FEASIBLE if ok else INFEASIBLE)


@dataclass(frozen=True)
class PlanTotals:
    total_psnr_db: float
    total_rate_kbps: float
    total_time_s: float
    per_segment_psnr_db: tuple[float, ...]


def summarize_plan(solution: Solution, instance: PlanningInstance) -> PlanTotals:
    """Recompute the totals of a plan and cross-check them against the solution."""
    if len(solution.choice) != instance.num_segments:
        raise ValidationError(
            f"plan has {len(solution.choice)} choices for {instance.num_segments} segments"
        )
    for i, j in enumerate(solution.choice):
        if not 0 <= j < instance.num_points:
            raise ValidationError(f"segment {i}: choice {j} is out of range")
    u, r, t = sequential_totals(instance, solution.choice)
    for name, mine, theirs in (
        ("utility", u, solution.total_utility),
        ("rate", r, solution.total_rate),
        ("time", t, solution.total_time),
    ):
        if not abs(mine - theirs) <= SUMMARY_TOL * max(1.0, abs(mine)):
            raise ValidationError(f"stored total {name} {theirs} disagrees with recomputed {mine}")
    per_seg = tuple(float(instance.utility[i, j]) for i, j in enumerate(solution.choice))
    return PlanTotals(u, r, t, per_seg)


def bd_rate(anchor: RDCurve, test: RDCurve) -> float:
    """Average bitrate difference (percent) of ``test`` against ``anchor`` at equal PSNR.

    Each curve's log10(rate) is fitted as a cubic in PSNR and the two fits
    are integrated over the shared PSNR range. Negative values mean the test
    curve needs less rate.
    """
    for name, c in (("anchor", anchor), ("test", test)):
        if len(c.bitrates_kbps) < 4:
            raise ValidationError(f"{name} curve needs at least 4 points for a cubic fit")
    lo = max(anchor.psnr.min(), test.psnr.min())
    hi = min(anchor.psnr.max(), test.psnr.max())
    if not hi > lo:
        raise ValidationError("the curves have no overlapping PSNR range")
    fits = [np.polyint(np.polyfit(c.psnr, np.log10(c.rates), 3)) for c in (anchor, test)]
    areas = [np.polyval(p, hi) - np.polyval(p, lo) for p in fits]
    mean_diff = (areas[1] - areas[0]) / (hi - lo)
    return float((10.0**mean_diff - 1.0) * 100.0)


# --------------------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    runs: int
    planner_feasible: int
    planner_infeasible: int
    baseline_feasible: int
    baseline_infeasible: int
    # means of total PSNR over the runs where that plan was feasible (NaN if none)
    planner_mean_psnr_db: float
    baseline_mean_psnr_db: float
    planner_mean_rate_kbps: float
    planner_mean_time_s: float
    # runs where both were feasible and the planner was strictly better
    strict_wins: int
    preset_histogram: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class SweepReport:
    axis: str
    num_segments: int
    baseline: str
    rows: tuple[SweepRow, ...]

    @property
    def axis_values(self) -> tuple[float, ...]:
        return tuple(r.axis_value for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "axis": self.axis,
            "num_segments": self.num_segments,
            "baseline": self.baseline,
            "rows": [asdict(r) for r in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(_json_safe(self.to_dict()), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        labels = [p.label for p in Preset]
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        scalar = [f for f in SweepRow.__dataclass_fields__ if f != "preset_histogram"]
        w.writerow([self.axis if f == "axis_value" else f for f in scalar] + [f"count_{x}" for x in labels])
        for row in self.rows:
            vals = [getattr(row, f) for f in scalar]
            w.writerow([repr(v) if isinstance(v, float) else v for v in vals]
                       + [row.preset_histogram.get(x, 0) for x in labels])
        return out.getvalue()

    def mean_psnr_curves(self) -> tuple[RDCurve, RDCurve]:
        """(baseline, planner) curves of mean per-segment PSNR against the budget axis."""
        keep = [r for r in self.rows
                if math.isfinite(r.planner_mean_psnr_db) and math.isfinite(r.baseline_mean_psnr_db)]
        if not keep:
            raise ValidationError("no sweep row has both planner and baseline results")
        x = [r.axis_value for r in keep]
        base = RDCurve.from_arrays(x, [r.baseline_mean_psnr_db / self.num_segments for r in keep])
        plan = RDCurve.from_arrays(x, [r.planner_mean_psnr_db / self.num_segments for r in keep])
        return base, plan


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def sweep_bd_rate(report: SweepReport) -> float:
    """Planner-versus-baseline BD-rate, using the rate budget as the rate axis."""
    if report.axis != "rate_threshold_kbps":
        raise ValidationError("BD-rate needs a sweep over the rate budget")
    base, plan = report.mean_psnr_curves()
    return bd_rate(base, plan)


def sample_windows(pool_size: int, num_segments: int, runs: int, seed: int) -> list[list[int]]:
    """One seeded shuffle per run; each run takes the first ``num_segments`` rows."""
    if runs < 1:
        raise ValidationError("runs must be >= 1")
    if pool_size < num_segments:
        raise ValidationError(f"need at least {num_segments} segments, got {pool_size}")
    rng = np.random.default_rng(seed)
    return [rng.permutation(pool_size)[:num_segments].tolist() for _ in range(runs)]


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values) if values else math.nan


def _sweep_row(
    axis_value: float,
    pool: PlanningInstance,
    windows: list[list[int]],
    budgets: Budgets,
    baseline: tuple[Preset, int] | None,
) -> SweepRow:
    grid = pool.grid
    hist = {p.label: 0 for p in grid.presets}
    plan_u, plan_r, plan_t, base_u = [], [], [], []
    wins = base_bad = 0
    for rows in windows:
        inst = pool.sub_instance(rows)
        sol = solve_bb(inst, budgets)
        if sol.feasible:
            plan_u.append(sol.total_utility)
            plan_r.append(sol.total_rate)
            plan_t.append(sol.total_time)
            for j in sol.choice:
                hist[grid[j].preset.label] += 1
        if baseline is None:
            continue
        base = baseline_plan(inst, baseline[0], baseline[1], budgets)
        if base.feasible:
            base_u.append(base.total_utility)
            if sol.feasible and sol.total_utility > base.total_utility:
                wins += 1
        else:
            base_bad += 1
    n = len(windows)
    return SweepRow(
        axis_value=float(axis_value),
        runs=n,
        planner_feasible=len(plan_u),
        planner_infeasible=n - len(plan_u),
        baseline_feasible=len(base_u),
        baseline_infeasible=base_bad if baseline is not None else 0,
        planner_mean_psnr_db=_mean(plan_u),
        baseline_mean_psnr_db=_mean(base_u),
        planner_mean_rate_kbps=_mean(plan_r),
        planner_mean_time_s=_mean(plan_t),
        strict_wins=wins,
        preset_histogram=hist,
    )


def _pool_instance(segments, grid, models: ModelSet) -> PlanningInstance:
    if isinstance(segments, PlanningInstance):
        return segments
    return build_instance(
        list(segments), grid, models.time_models, models.cluster_models, models.rd_classifiers
    )


def _baseline_at(grid: OperatingGrid, preset: Preset, per_segment_kbps: float) -> tuple[Preset, int] | None:
    b = int(round(per_segment_kbps))
    if preset in grid.presets and b == per_segment_kbps and b in grid.bitrates_kbps:
        return preset, b
    return None


def sweep_rate_budget(
    segments: Sequence[SegmentFeatures] | PlanningInstance,
    grid: OperatingGrid,
    models: ModelSet | None,
    rate_budgets: Sequence[float],
    time_budget: float,
    runs: int = 877,
    seed: int = 0,
    num_segments: int = 6,
    baseline_preset: Preset = BASELINE2[0],
) -> SweepReport:
    """Planner against a fixed-preset baseline at ``R_th / L`` kbps per segment.

    ``segments`` is the pool to sample windows from (or an already predicted
    pool instance). The same windows are reused for every budget.
    """
    pool = _pool_instance(segments, grid, models)
    windows = sample_windows(pool.num_segments, num_segments, runs, seed)
    rows = []
    for R in rate_budgets:
        base = _baseline_at(grid, baseline_preset, R / num_segments)
        if base is None:
            raise ValidationError(
                f"baseline point ({baseline_preset}, {R / num_segments} kbps) is not on the grid"
            )
        rows.append(_sweep_row(R, pool, windows, Budgets(R, time_budget), base))
    return SweepReport("rate_threshold_kbps", num_segments, baseline_preset.label, tuple(rows))


def sweep_time_budget(
    segments: Sequence[SegmentFeatures] | PlanningInstance,
    grid: OperatingGrid,
    models: ModelSet | None,
    time_budgets: Sequence[float],
    rate_budget: float,
    runs: int = 877,
    seed: int = 0,
    num_segments: int = 6,
    baseline_preset: Preset = BASELINE2[0],
) -> SweepReport:
    """Preset histograms and infeasibility counts as the time budget tightens.

    The baseline columns are filled when ``rate_budget / L`` is a grid bitrate.
    """
    pool = _pool_instance(segments, grid, models)
    windows = sample_windows(pool.num_segments, num_segments, runs, seed)
    base = (_baseline_at(grid, baseline_preset, rate_budget / num_segments)
            if math.isfinite(rate_budget) else None)
    rows = tuple(
        _sweep_row(T, pool, windows, Budgets(rate_budget, T), base) for T in time_budgets
    )
    return SweepReport("time_threshold_s", num_segments, baseline_preset.label if base else "", rows)


def mean_speed_rank(row: SweepRow) -> float:
    """Average speed rank of the chosen presets (0 = ultrafast); NaN if nothing was chosen."""
    total = sum(row.preset_histogram.values())
    if total == 0:
        return math.nan
    return sum(Preset.parse(k).speed_rank * v for k, v in row.preset_histogram.items()) / total
