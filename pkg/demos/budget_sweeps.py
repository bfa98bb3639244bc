"""How the plan responds as the rate and time budgets move.

Sweeps the rate budget at a fixed 11 s time budget and reports the
planner-versus-veryfast BD-rate, then tightens the time budget and
shows the preset mix drifting toward the fast end until windows stop
fitting at all.

    python demos/budget_sweeps.py [--runs N]
"""

import argparse

from presetopt import build_instance, build_models_from_corpus, gen_corpus, default_grid
from presetopt.evaluation import (
    mean_speed_rank,
    default_rate_axis,
    sweep_bd_rate,
    sweep_rate_budget,
    sweep_time_budget,
)
from presetopt.predictors import GBDTParams

ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
ap.add_argument("--runs", type=int, default=100)
args = ap.parse_args()

corpus = gen_corpus(seed=0, num_segments=300)
models = build_models_from_corpus(corpus, gbdt=GBDTParams(n_rounds=60))
grid = default_grid()
pool = build_instance(corpus.features, grid, models.time_models, models.cluster_models,
                      models.rd_classifiers)

rate = sweep_rate_budget(pool, grid, None, default_rate_axis(), 11.0, runs=args.runs)
print("rate budget sweep (mean PSNR per segment)")
for row in rate.rows:
    print(f"  {row.axis_value:7.0f} kbps  planner {row.planner_mean_psnr_db / 6:6.2f} dB  "
          f"veryfast {row.baseline_mean_psnr_db / 6:6.2f} dB")
print(f"BD-rate of the planner against veryfast: {sweep_bd_rate(rate):.2f}%")

# a harder pool: only high-motion content
hard = gen_corpus(seed=1, num_segments=200, complexity_mix={"sports": 1.0, "gaming": 1.0})
hard_pool = build_instance(hard.features, grid, models.time_models, models.cluster_models,
                           models.rd_classifiers)
for name, p in (("mixed content", pool), ("sports and gaming", hard_pool)):
    time_sweep = sweep_time_budget(p, grid, None, (11.0, 8.0, 5.0, 3.0), 30000.0, runs=args.runs)
    print(f"\ntime budget sweep, {name}")
    for row in time_sweep.rows:
        mix = " ".join(f"{k}={v}" for k, v in row.preset_histogram.items())
        print(f"  {row.axis_value:4.0f} s  infeasible {row.planner_infeasible:3d}/{row.runs}  "
              f"speed rank {mean_speed_rank(row):.2f}  {mix}")
