"""Exact per-segment operating-point selection under rate and time budgets.

The problem is a multiple-choice knapsack with two resources: pick one
operating point per segment, maximise summed PSNR, keep summed bitrate and
summed transcoding time within their budgets (budgets are inclusive).

Every total is accumulated segment by segment in index order so that the
brute-force oracle and the branch-and-bound search produce bit-identical
floats. Among equal-utility optima the lexicographically smallest choice
vector wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Budgets, OperatingGrid, ValidationError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
# a fixed assignment that fits the budgets but carries no optimality claim
FEASIBLE = "feasible"
BRUTEFORCE_LIMIT = 10**7


@dataclass(frozen=True, eq=False)
class PlanningInstance:
    utility: np.ndarray  # (L, M) predicted PSNR, dB
    rate: np.ndarray  # (L, M) kbps
    time: np.ndarray  # (L, M) seconds
    grid: OperatingGrid | None = None
    segment_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        u = np.asarray(self.utility, dtype=float)
        r = np.asarray(self.rate, dtype=float)
        t = np.asarray(self.time, dtype=float)
        if u.ndim != 2 or u.shape != r.shape or u.shape != t.shape or u.size == 0:
            raise ValidationError("utility, rate and time must be non-empty L x M matrices")
        if not np.all(np.isfinite(u)):
            raise ValidationError("utilities must be finite")
        if np.any(~(r > 0)) or np.any(~(t > 0)):
            raise ValidationError("rates and times must be positive")
        if self.grid is not None and len(self.grid) != u.shape[1]:
            raise ValidationError("grid size does not match the number of columns")
        if self.segment_ids and len(self.segment_ids) != u.shape[0]:
            raise ValidationError("one segment id per row is required")
        for name, arr in (("utility", u), ("rate", r), ("time", t)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def num_segments(self) -> int:
        return self.utility.shape[0]

    @property
    def num_points(self) -> int:
        return self.utility.shape[1]

    def sub_instance(self, rows: Sequence[int]) -> "PlanningInstance":
        rows = list(rows)
        ids = tuple(self.segment_ids[i] for i in rows) if self.segment_ids else ()
        return PlanningInstance(
            self.utility[rows], self.rate[rows], self.time[rows], self.grid, ids
        )


@dataclass(frozen=True)
class Solution:
    choice: tuple[int, ...]
    total_utility: float
    total_rate: float
    total_time: float
    status: str
    nodes_explored: int = 0
    # diagnostics: the least total rate / time any assignment can reach
    min_total_rate: float = field(default=math.nan, compare=False)
    min_total_time: float = field(default=math.nan, compare=False)

    @property
    def feasible(self) -> bool:
        return self.status in (OPTIMAL, FEASIBLE)


def sequential_totals(instance: PlanningInstance, choice: Sequence[int]) -> tuple[float, float, float]:
    """(utility, rate, time) sums accumulated in segment order."""
    u = r = t = 0.0
    for i, j in enumerate(choice):
        u += float(instance.utility[i, j])
        r += float(instance.rate[i, j])
        t += float(instance.time[i, j])
    return u, r, t


def _min_totals(instance: PlanningInstance) -> tuple[float, float]:
    return float(instance.rate.min(axis=1).sum()), float(instance.time.min(axis=1).sum())


def _infeasible(instance: PlanningInstance, nodes: int = 0) -> Solution:
    min_r, min_t = _min_totals(instance)
    return Solution((), math.nan, math.nan, math.nan, INFEASIBLE, nodes, min_r, min_t)


def _solution(instance: PlanningInstance, choice: Sequence[int], nodes: int) -> Solution:
    u, r, t = sequential_totals(instance, choice)
    min_r, min_t = _min_totals(instance)
    return Solution(tuple(int(j) for j in choice), u, r, t, OPTIMAL, nodes, min_r, min_t)


def is_feasible(instance: PlanningInstance, budgets: Budgets, choice: Sequence[int]) -> bool:
    if len(choice) != instance.num_segments:
        return False
    _, r, t = sequential_totals(instance, choice)
    return r <= budgets.rate_threshold_kbps and t <= budgets.time_threshold_s


def solve_bruteforce(instance: PlanningInstance, budgets: Budgets) -> Solution:
    """Enumerate all ``M**L`` assignments (the verification oracle)."""
    L, M = instance.utility.shape
    if M**L > BRUTEFORCE_LIMIT:
        raise ValidationError(f"search space {M}^{L} exceeds the brute-force limit")
    u = instance.utility[0].copy()
    r = instance.rate[0].copy()
    t = instance.time[0].copy()
    for i in range(1, L):
        # C-order flattening keeps the enumeration lexicographic
        u = (u[:, None] + instance.utility[i][None, :]).ravel()
        r = (r[:, None] + instance.rate[i][None, :]).ravel()
        t = (t[:, None] + instance.time[i][None, :]).ravel()
    ok = (r <= budgets.rate_threshold_kbps) & (t <= budgets.time_threshold_s)
    if not ok.any():
        return _infeasible(instance, M**L)
    flat = int(np.argmax(np.where(ok, u, -np.inf)))  # first max = lexicographically smallest
    choice = np.unravel_index(flat, (M,) * L)
    return _solution(instance, [int(c) for c in choice], M**L)


def bound_upper(
    instance: PlanningInstance, budgets: Budgets, prefix: Sequence[int]
) -> float:
    """Optimistic utility of the best completion of ``prefix``.

    Each remaining segment contributes its best utility among points that
    individually fit the remaining slack in both budgets. Returns ``-inf``
    when the prefix already breaks a budget or some segment has no fitting
    point.
    """
    u, r, t = sequential_totals(instance, prefix)
    slack_r = budgets.rate_threshold_kbps - r
    slack_t = budgets.time_threshold_s - t
    if slack_r < 0 or slack_t < 0:
        return -math.inf
    k = len(prefix)
    if k == instance.num_segments:
        return u
    fits = (instance.rate[k:] <= slack_r) & (instance.time[k:] <= slack_t)
    if not fits.any(axis=1).all():
        return -math.inf
    best = np.where(fits, instance.utility[k:], -np.inf).max(axis=1)
    return u + float(best.sum())


def lagrangian_multipliers(
    instance: PlanningInstance,
    budgets: Budgets,
    lower_bound: float | None = None,
    iterations: int = 40,
    start: tuple[float, float] | None = None,
) -> tuple[float, float, float]:
    """Approximately minimise the Lagrangian dual of the budget constraints.

    Returns ``(rate_multiplier, time_multiplier, dual_bound)``. Any
    non-negative multipliers give a valid upper bound
    ``lam*R + mu*T + sum_i max_j(u_ij - lam*r_ij - mu*t_ij)``; projected
    subgradient steps with a Polyak step length just make it tighter.
    """
    R, T = budgets.rate_threshold_kbps, budgets.time_threshold_s
    u = instance.utility
    # scale each resource by its budget so both multipliers live in dB units
    rs = instance.rate / R if math.isfinite(R) else np.zeros_like(u)
    ts = instance.time / T if math.isfinite(T) else np.zeros_like(u)
    active = np.array([math.isfinite(R), math.isfinite(T)], dtype=float)
    rows = np.arange(u.shape[0])

    def dual(m: np.ndarray) -> tuple[float, np.ndarray]:
        red = u - m[0] * rs - m[1] * ts
        j = np.argmax(red, axis=1)
        value = float(m[0] * active[0] + m[1] * active[1] + red[rows, j].sum())
        grad = np.array([1.0 - rs[rows, j].sum(), 1.0 - ts[rows, j].sum()]) * active
        return value, grad

    m = np.zeros(2)
    if start is not None:
        m = np.array([start[0] * R if math.isfinite(R) else 0.0,
                      start[1] * T if math.isfinite(T) else 0.0])
    best_val, g = dual(m)
    best_m = m.copy()
    if lower_bound is None or not math.isfinite(lower_bound):
        lower_bound = best_val - float(np.ptp(u, axis=1).sum()) - 1.0
    theta = 1.0
    for _ in range(iterations):
        norm = float(g @ g)
        if norm == 0.0:
            break
        m = np.maximum(m - theta * (best_val - lower_bound) / norm * g, 0.0)
        val, g_new = dual(m)
        if val < best_val - 1e-12:
            best_val, best_m = val, m.copy()
        else:
            theta *= 0.7
        g = g_new
        if best_val - lower_bound < 1e-9 * max(1.0, abs(best_val)):
            break
    lam = best_m[0] / R if math.isfinite(R) else 0.0
    mu = best_m[1] / T if math.isfinite(T) else 0.0
    return float(lam), float(mu), float(best_val)


def greedy_incumbent(instance: PlanningInstance, budgets: Budgets) -> Solution | None:
    """Segment-by-segment greedy pick under a proportional share of each budget.

    Segment ``i`` (0-based) may bring cumulative use up to ``(i+1)/L`` of each
    budget. Returns ``None`` when some segment has no admissible point.
    """
    L = instance.num_segments
    R, T = budgets.rate_threshold_kbps, budgets.time_threshold_s
    choice = []
    used_r = used_t = 0.0
    for i in range(L):
        cap_r = R if i == L - 1 else R * (i + 1) / L
        cap_t = T if i == L - 1 else T * (i + 1) / L
        ok = (used_r + instance.rate[i] <= cap_r) & (used_t + instance.time[i] <= cap_t)
        if not ok.any():
            return None
        j = int(np.argmax(np.where(ok, instance.utility[i], -np.inf)))
        choice.append(j)
        used_r += float(instance.rate[i, j])
        used_t += float(instance.time[i, j])
    if not is_feasible(instance, budgets, choice):
        return None
    return _solution(instance, choice, 0)


def _local_search(
    instance: PlanningInstance, budgets: Budgets, choice: list[int], max_rounds: int = 50
) -> list[int]:
    """Hill-climb a feasible assignment by changing one segment at a time."""
    u, r, t = instance.utility, instance.rate, instance.time
    R, T = budgets.rate_threshold_kbps, budgets.time_threshold_s
    rows = np.arange(instance.num_segments)
    x = list(choice)
    for _ in range(max_rounds):
        cu, cr, ct = u[rows, x], r[rows, x], t[rows, x]
        ok = (cr.sum() - cr[:, None] + r <= R) & (ct.sum() - ct[:, None] + t <= T)
        gain = np.where(ok, u - cu[:, None], -np.inf)
        i, j = np.unravel_index(int(np.argmax(gain)), gain.shape)
        if not gain[i, j] > 1e-12:
            break
        trial = list(x)
        trial[int(i)] = int(j)
        if not is_feasible(instance, budgets, trial):
            break
        x = trial
    return x


def _repair(instance: PlanningInstance, budgets: Budgets, choice: list[int]) -> list[int] | None:
    """Walk an infeasible assignment back into the budgets, cheapest loss first."""
    u, r, t = instance.utility, instance.rate, instance.time
    R, T = budgets.rate_threshold_kbps, budgets.time_threshold_s
    rows = np.arange(instance.num_segments)
    x = list(choice)
    for _ in range(4 * instance.num_segments * instance.num_points):
        cr, ct = r[rows, x].sum(), t[rows, x].sum()
        excess = max(0.0, cr / R - 1.0) + max(0.0, ct / T - 1.0)
        if excess == 0.0:
            return x if is_feasible(instance, budgets, x) else None
        nr = cr - r[rows, x][:, None] + r
        nt = ct - t[rows, x][:, None] + t
        new_excess = np.maximum(0.0, nr / R - 1.0) + np.maximum(0.0, nt / T - 1.0)
        drop = excess - new_excess
        loss = np.maximum(u[rows, x][:, None] - u, 1e-9)
        score = np.where(drop > 1e-15, drop / loss, -np.inf)
        i, j = np.unravel_index(int(np.argmax(score)), score.shape)
        if not np.isfinite(score[i, j]):
            return None
        x[int(i)] = int(j)
    return None


def _warm_start(
    instance: PlanningInstance,
    budgets: Budgets,
    lam: float,
    mu: float,
    dp_path: list[int] | None = None,
) -> Solution | None:
    """Best locally improved assignment among a few cheap starting points."""
    starts = []
    greedy = greedy_incumbent(instance, budgets)
    if greedy is not None:
        starts.append(list(greedy.choice))
    seeds = [[int(j) for j in np.argmax(
        instance.utility - lam * instance.rate - mu * instance.time, axis=1)]]
    if dp_path is not None:
        seeds.insert(0, dp_path)
    for seed in seeds:
        repaired = _repair(instance, budgets, seed)
        if repaired is not None:
            starts.append(repaired)
    best = None
    for x in starts:
        x = _local_search(instance, budgets, x)
        cand = _solution(instance, x, 0)
        if best is None or cand.total_utility > best.total_utility:
            best = cand
    return best


def _candidates(instance: PlanningInstance, i: int) -> list[tuple[int, float, float, float]]:
    """Points of segment ``i`` by descending utility (ascending index on ties).

    Drops a point when a lower-indexed point is at least as good on all
    three axes; such a point can never be the tie-broken optimum.
    """
    u, r, t = instance.utility[i], instance.rate[i], instance.time[i]
    idx = np.arange(len(u))
    dom = (
        (idx[:, None] < idx[None, :])
        & (u[:, None] >= u[None, :])
        & (r[:, None] <= r[None, :])
        & (t[:, None] <= t[None, :])
    )
    keep = np.flatnonzero(~dom.any(axis=0))
    out = [(int(j), float(u[j]), float(r[j]), float(t[j])) for j in keep]
    out.sort(key=lambda c: (-c[1], c[0]))
    return out


def _rate_exact_suffix_bound(
    instance: PlanningInstance, R: float, mu: float, max_units: int = 1024
) -> tuple[list[list[float]], float, list[int]]:
    """Suffix tables ``F[k][q]``: best ``sum(u - mu*t)`` over segments ``k..L-1``
    whose rounded-down rates fit in ``q`` units.

    Rates are floored to a unit (their common divisor when they are integral,
    else ``R / max_units``), which only enlarges the feasible set, so
    ``F[k][floor(slack/unit)] + mu*slack_t`` bounds any completion from above.
    Also returns the assignment attaining ``F[0][full budget]``.
    """
    L = instance.num_segments
    rates = instance.rate
    unit = None
    if np.all(rates == np.round(rates)):
        g = int(np.gcd.reduce(rates.astype(np.int64).ravel()))
        if g > 0 and R / g <= max_units:
            unit = float(g)
    if unit is None:
        unit = R / max_units
    n_units = int(R / unit + 1e-9)
    q = np.floor(rates / unit * (1.0 - 1e-12)).astype(np.int64)
    w = instance.utility - mu * instance.time
    tables: list = [None] * (L + 1)
    best_j: list = [None] * L
    nxt = np.zeros(n_units + 1)
    tables[L] = nxt.tolist()
    cols = np.arange(n_units + 1)
    for k in range(L - 1, -1, -1):
        src = cols[None, :] - q[k][:, None]
        vals = np.where(src >= 0, w[k][:, None] + nxt[np.maximum(src, 0)], -np.inf)
        best_j[k] = np.argmax(vals, axis=0)
        nxt = vals.max(axis=0)
        tables[k] = nxt.tolist()
    path = []
    left = n_units
    if math.isfinite(tables[0][left]):
        for k in range(L):
            j = int(best_j[k][left])
            path.append(j)
            left -= int(q[k, j])
    return tables, unit, path


def solve_bb(instance: PlanningInstance, budgets: Budgets) -> Solution:
    """Depth-first branch and bound, segments in index order.

    Pruning uses admissible tests only: even the cheapest completion would
    exceed a budget; a Lagrangian bound (both budgets relaxed) or a
    rate-exact dynamic-programming bound (time relaxed) on the completion
    falls below the incumbent. Nodes whose bound ties the incumbent are
    still explored so the lexicographic tie-break is exact.
    """
    L = instance.num_segments
    R, T = budgets.rate_threshold_kbps, budgets.time_threshold_s
    cands = [_candidates(instance, i) for i in range(L)]

    min_r = instance.rate.min(axis=1)
    min_t = instance.time.min(axis=1)
    suffix_r = np.concatenate([np.cumsum(min_r[::-1])[::-1], [0.0]]).tolist()
    suffix_t = np.concatenate([np.cumsum(min_t[::-1])[::-1], [0.0]]).tolist()
    eps_r = 1e-9 * max(1.0, abs(R)) if math.isfinite(R) else 0.0
    eps_t = 1e-9 * max(1.0, abs(T)) if math.isfinite(T) else 0.0
    if suffix_r[0] > R + eps_r or suffix_t[0] > T + eps_t:
        return _infeasible(instance, 1)

    lam, mu, _ = lagrangian_multipliers(instance, budgets)
    rate_table = _rate_exact_suffix_bound(instance, R, mu) if math.isfinite(R) else None
    incumbent = _warm_start(instance, budgets, lam, mu, rate_table[2] if rate_table else None)
    best_u = incumbent.total_utility if incumbent else -math.inf
    best_choice: list[int] | None = list(incumbent.choice) if incumbent else None
    if incumbent is not None:
        # Polyak steps are better aimed once a real lower bound is known
        lam, mu, _ = lagrangian_multipliers(instance, budgets, best_u, start=(lam, mu))
    reduced = instance.utility - lam * instance.rate - mu * instance.time
    suffix_g = np.concatenate([np.cumsum(reduced.max(axis=1)[::-1])[::-1], [0.0]]).tolist()
    scale = float(np.abs(instance.utility).max()) * L
    eps_u = 1e-9 * max(1.0, scale)
    lam_on, mu_on = lam > 0.0, mu > 0.0
    if rate_table is not None:
        if incumbent is not None:
            rate_table = _rate_exact_suffix_bound(instance, R, mu)
        tables, unit, _ = rate_table
        inv_unit = (1.0 + 1e-12) / unit
        n_units = len(tables[0]) - 1

    nodes = 0
    path = [0] * L
    last = cands[L - 1]

    def finish(pu: float, pr: float, pt: float) -> None:
        # last segment: the first feasible candidate has the best utility;
        # later ones are only scanned for exact float ties with a lower index
        nonlocal nodes, best_u, best_choice
        nodes += 1
        hit_u, hit_j = None, -1
        for j, u, r, t in last:
            nu = pu + u
            if hit_u is None:
                if nu < best_u:
                    return
            elif nu < hit_u:
                break
            if pr + r <= R and pt + t <= T:
                if hit_u is None:
                    hit_u, hit_j = nu, j
                elif j < hit_j:
                    hit_j = j
        if hit_u is None:
            return
        path[L - 1] = hit_j
        if hit_u > best_u or best_choice is None or (hit_u == best_u and path < best_choice):
            best_u, best_choice = hit_u, path.copy()

    def dfs(i: int, pu: float, pr: float, pt: float) -> None:
        nonlocal nodes
        if i == L - 1:
            finish(pu, pr, pt)
            return
        nodes += 1
        rest_r = suffix_r[i + 1] - eps_r
        rest_t = suffix_t[i + 1] - eps_t
        g_next = suffix_g[i + 1]
        table = tables[i + 1] if rate_table is not None else None
        for j, u, r, t in cands[i]:
            nr = pr + r
            nt = pt + t
            if nr + rest_r > R or nt + rest_t > T:
                continue
            nu = pu + u
            if best_choice is not None:
                floor = best_u - eps_u
                slack_t = mu * (T - nt) if mu_on else 0.0
                bound = nu + g_next + slack_t
                if lam_on:
                    bound += lam * (R - nr)
                # the bound is not monotone in the candidate order: keep scanning
                if bound < floor:
                    continue
                if table is not None:
                    if nu + table[min(int((R - nr) * inv_unit + 1e-9), n_units)] + slack_t < floor:
                        continue
            path[i] = j
            dfs(i + 1, nu, nr, nt)

    dfs(0, 0.0, 0.0, 0.0)
    if best_choice is None:
        return _infeasible(instance, nodes)
    return _solution(instance, best_choice, nodes)


def lagrangian_gap(instance: PlanningInstance, budgets: Budgets, solution: Solution) -> float:
    """Dual bound minus achieved utility; non-negative for an optimal solution."""
    _, _, bound = lagrangian_multipliers(instance, budgets, solution.total_utility, iterations=200)
    return bound - solution.total_utility
