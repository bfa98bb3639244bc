import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from presetopt.core import DEFAULT_BUDGETS, Budgets, ValidationError
from presetopt.solver import (
    INFEASIBLE,
    OPTIMAL,
    PlanningInstance,
    bound_upper,
    greedy_incumbent,
    is_feasible,
    lagrangian_gap,
    solve_bb,
    solve_bruteforce,
)

from conftest import random_instance

UNBOUNDED = Budgets.unconstrained()


def _inst(u, r, t):
    return PlanningInstance(np.array(u, float), np.array(r, float), np.array(t, float))


def _key(sol):
    return sol.status, sol.total_utility, sol.choice


# --------------------------------------------------------------------- hand examples


def test_single_point_feasible_and_infeasible():
    inst = _inst([[40.0]], [[1000.0]], [[1.0]])
    for solve in (solve_bruteforce, solve_bb):
        sol = solve(inst, Budgets(1000.0, 2.0))
        assert sol.status == OPTIMAL and sol.choice == (0,) and sol.total_utility == 40.0
        bad = solve(inst, Budgets(999.0, 2.0))
        assert bad.status == INFEASIBLE and bad.choice == ()
        assert bad.min_total_rate == 1000.0 and bad.min_total_time == 1.0


def test_lexicographic_tie_break_on_hand_instance():
    inst = _inst([[10, 20], [10, 20]], [[1, 2], [1, 2]], [[1, 1], [1, 1]])
    for solve in (solve_bruteforce, solve_bb):
        sol = solve(inst, Budgets(3.0, 10.0))
        assert sol.choice == (0, 1) and sol.total_utility == 30.0


def test_budgets_are_inclusive():
    inst = _inst([[5.0, 9.0]], [[1.0, 2.0]], [[1.0, 3.0]])
    assert solve_bb(inst, Budgets(2.0, 3.0)).choice == (1,)
    assert solve_bb(inst, Budgets(2.0, 2.999)).choice == (0,)


def test_unconstrained_is_per_segment_argmax_with_lowest_index_ties():
    rng = np.random.default_rng(0)
    u = rng.integers(0, 4, (5, 7)).astype(float)  # many ties
    inst = _inst(u, np.ones((5, 7)), np.ones((5, 7)))
    expect = tuple(int(np.argmax(row)) for row in u)
    assert solve_bb(inst, UNBOUNDED).choice == expect
    assert solve_bruteforce(inst, UNBOUNDED).choice == expect
    assert greedy_incumbent(inst, UNBOUNDED).choice == expect


def test_bruteforce_guard():
    inst = _inst(np.ones((8, 8)), np.ones((8, 8)), np.ones((8, 8)))
    with pytest.raises(ValidationError):
        solve_bruteforce(inst, UNBOUNDED)


@pytest.mark.parametrize(
    "u, r, t",
    [([[1.0]], [[0.0]], [[1.0]]), ([[1.0]], [[1.0]], [[-1.0]]), ([[math.nan]], [[1.0]], [[1.0]]),
     ([[1.0, 2.0]], [[1.0]], [[1.0]]), ([], [], [])],
)
def test_instance_validation(u, r, t):
    with pytest.raises(ValidationError):
        _inst(u, r, t)


def test_instance_is_read_only():
    inst = _inst([[1.0]], [[1.0]], [[1.0]])
    with pytest.raises(ValueError):
        inst.utility[0, 0] = 5.0


# --------------------------------------------------------------------- exactness


def test_bb_matches_bruteforce_on_seeded_instances():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        L, M = int(rng.integers(1, 6)), int(rng.integers(2, 9))
        inst, budgets = random_instance(rng, L, M)
        assert _key(solve_bb(inst, budgets)) == _key(solve_bruteforce(inst, budgets))


@settings(max_examples=150, deadline=None)
@given(
    L=st.integers(1, 4),
    M=st.integers(1, 5),
    seed=st.integers(0, 2**31),
    rfrac=st.floats(0.0, 1.2),
    tfrac=st.floats(0.0, 1.2),
)
def test_bb_matches_bruteforce_with_integer_ties(L, M, seed, rfrac, tfrac):
    rng = np.random.default_rng(seed)
    u = rng.integers(0, 3, (L, M)).astype(float)
    r = rng.integers(1, 4, (L, M)).astype(float)
    t = rng.integers(1, 4, (L, M)).astype(float)
    inst = _inst(u, r, t)
    budgets = Budgets(max(rfrac * r.sum(), 0.5), max(tfrac * t.sum(), 0.5))
    bb, bf = solve_bb(inst, budgets), solve_bruteforce(inst, budgets)
    assert _key(bb) == _key(bf)
    if bb.feasible:
        assert is_feasible(inst, budgets, bb.choice)
        assert len(bb.choice) == L


def test_full_size_instance_optimal_with_dual_certificate():
    rng = np.random.default_rng(7)
    L, M = 6, 50
    u = rng.uniform(30, 55, (L, M))
    r = np.tile(np.repeat([200, 400, 600, 800, 1000, 2000, 3000, 4000, 5000, 6000], 1), (L, 5))
    t = rng.uniform(0.2, 3.5, (L, M))
    inst = _inst(u, r, t)
    sol = solve_bb(inst, DEFAULT_BUDGETS)
    assert sol.status == OPTIMAL
    assert sol.total_rate <= 30000 and sol.total_time <= 11
    assert len(sol.choice) == 6
    # any non-negative multipliers bound the optimum from above
    assert lagrangian_gap(inst, DEFAULT_BUDGETS, sol) >= -1e-9


# --------------------------------------------------------------------- bound


def test_bound_examples():
    rng = np.random.default_rng(1)
    inst, budgets = random_instance(rng, 4, 5)
    assert bound_upper(inst, UNBOUNDED, []) == pytest.approx(inst.utility.max(axis=1).sum())
    full = [0, 1, 2, 3]
    assert bound_upper(inst, UNBOUNDED, full) == pytest.approx(inst.utility[range(4), full].sum())


def test_bound_never_below_best_completion():
    rng = np.random.default_rng(99)
    for _ in range(200):
        L, M = int(rng.integers(1, 5)), int(rng.integers(2, 6))
        inst, budgets = random_instance(rng, L, M)
        k = int(rng.integers(0, L + 1))
        prefix = [int(j) for j in rng.integers(0, M, k)]
        best = -math.inf
        for rest in itertools.product(range(M), repeat=L - k):
            choice = prefix + list(rest)
            if is_feasible(inst, budgets, choice):
                best = max(best, float(inst.utility[range(L), choice].sum()))
        assert bound_upper(inst, budgets, prefix) >= best - 1e-9


# --------------------------------------------------------------------- greedy


def test_greedy_none_when_first_segment_cannot_fit():
    inst = _inst([[1.0, 2.0], [1.0, 1.0]], [[5.0, 6.0], [1.0, 1.0]], [[1.0, 1.0], [1.0, 1.0]])
    assert greedy_incumbent(inst, Budgets(4.0, 10.0)) is None


def test_greedy_feasible_and_below_optimum():
    rng = np.random.default_rng(5)
    for _ in range(100):
        inst, budgets = random_instance(rng, int(rng.integers(1, 6)), int(rng.integers(2, 8)))
        g = greedy_incumbent(inst, budgets)
        if g is None:
            continue
        assert is_feasible(inst, budgets, g.choice)
        assert g.total_utility <= solve_bb(inst, budgets).total_utility + 1e-9


# --------------------------------------------------------------------- properties


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31), L=st.integers(1, 5), M=st.integers(2, 8))
def test_dominance_and_feasibility(seed, L, M):
    rng = np.random.default_rng(seed)
    inst, budgets = random_instance(rng, L, M)
    sol = solve_bb(inst, budgets)
    for j in range(M):  # every fixed-column baseline
        fixed = [j] * L
        if is_feasible(inst, budgets, fixed):
            assert sol.feasible
            assert sol.total_utility >= float(inst.utility[range(L), fixed].sum()) - 1e-9
    if sol.feasible:
        assert sol.total_rate <= budgets.rate_threshold_kbps
        assert sol.total_time <= budgets.time_threshold_s
        assert sol.total_utility == pytest.approx(float(inst.utility[range(L), sol.choice].sum()))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31), grow_r=st.floats(1.0, 2.0), grow_t=st.floats(1.0, 2.0))
def test_budget_monotonicity(seed, grow_r, grow_t):
    rng = np.random.default_rng(seed)
    inst, budgets = random_instance(rng, 4, 6)
    small = solve_bb(inst, budgets)
    big = solve_bb(inst, Budgets(budgets.rate_threshold_kbps * grow_r,
                                 budgets.time_threshold_s * grow_t))
    if small.feasible:
        assert big.feasible and big.total_utility >= small.total_utility


def test_determinism():
    rng = np.random.default_rng(3)
    inst, budgets = random_instance(rng, 6, 20)
    assert solve_bb(inst, budgets) == solve_bb(inst, budgets)
