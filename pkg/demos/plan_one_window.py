"""Plan six segments of a synthetic stream and compare against fixed presets.

Trains the per-preset models on a small synthetic corpus, predicts the
(PSNR, rate, time) table for one six-segment window, solves it under the
default budgets, and prints the plan next to two fixed-preset baselines.

    python demos/plan_one_window.py
"""

from presetopt import (
    DEFAULT_BUDGETS,
    baseline_plan,
    build_instance,
    build_models_from_corpus,
    gen_corpus,
    default_grid,
    solve_bb,
)
from presetopt.predictors import GBDTParams

corpus = gen_corpus(seed=0, num_segments=200)
models = build_models_from_corpus(corpus, k=6, seed=0, gbdt=GBDTParams(n_rounds=60))
grid = default_grid()

window = corpus.features[:6]
inst = build_instance(window, grid, models.time_models, models.cluster_models, models.rd_classifiers)
sol = solve_bb(inst, DEFAULT_BUDGETS)

print(f"budgets: {DEFAULT_BUDGETS.rate_threshold_kbps:g} kbps, {DEFAULT_BUDGETS.time_threshold_s:g} s")
print(f"status {sol.status}, {sol.nodes_explored} nodes")
for i, j in enumerate(sol.choice):
    pt = grid[j]
    print(f"  {inst.segment_ids[i]:24s} {pt.preset.label:9s} {pt.bitrate_kbps:5d} kbps "
          f"{inst.time[i, j]:.2f} s  {inst.utility[i, j]:.2f} dB")
print(f"planner : {sol.total_utility:.2f} dB total, {sol.total_rate:.0f} kbps, {sol.total_time:.2f} s")

# the same window with one preset at 5000 kbps everywhere
for preset in ("fast", "veryfast"):
    base = baseline_plan(inst, preset, 5000, DEFAULT_BUDGETS)
    print(f"{preset:8s}: {base.total_utility:.2f} dB total, {base.total_rate:.0f} kbps, "
          f"{base.total_time:.2f} s ({base.status})")
