"""Train once, save the models, reload them elsewhere, and plan.

Shows the checksummed model container: a reloaded model set gives the
same predictions, and a damaged file is refused instead of silently
producing a different plan.

    python demos/models_on_disk.py
"""

import tempfile
from pathlib import Path

import numpy as np

from presetopt import (
    DEFAULT_BUDGETS,
    build_instance,
    build_models_from_corpus,
    gen_corpus,
    default_grid,
    solve_bb,
)
from presetopt.data_io import ChecksumError, load_models, save_models
from presetopt.predictors import GBDTParams

corpus = gen_corpus(seed=2, num_segments=150)
models = build_models_from_corpus(corpus, gbdt=GBDTParams(n_rounds=40))

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "models.json"
    save_models(path, models)
    print(f"saved {path.stat().st_size / 1024:.0f} KiB")
    again = load_models(path)

    window = gen_corpus(seed=99, num_segments=6).features
    grid = default_grid()
    a = build_instance(window, grid, models.time_models, models.cluster_models, models.rd_classifiers)
    b = build_instance(window, grid, again.time_models, again.cluster_models, again.rd_classifiers)
    print("identical predictions after reload:",
          np.array_equal(a.utility, b.utility) and np.array_equal(a.time, b.time))
    print("same plan:", solve_bb(a, DEFAULT_BUDGETS).choice == solve_bb(b, DEFAULT_BUDGETS).choice)

    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) - 100])
    try:
        load_models(path)
    except ChecksumError as exc:
        print("truncated file refused:", exc)
