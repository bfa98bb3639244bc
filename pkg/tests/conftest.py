import numpy as np
import pytest

from presetopt.core import default_grid
from presetopt.pipeline import build_instance, build_models_from_corpus
from presetopt.predictors import GBDTParams
from presetopt.synth import gen_corpus

# PASS/FAIL lines collected by the acceptance module, echoed in the summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_corpus():
    return gen_corpus(seed=0, num_segments=877)


@pytest.fixture(scope="session")
def default_models(default_corpus):
    return build_models_from_corpus(default_corpus, k=6, seed=0)


@pytest.fixture(scope="session")
def default_pool(default_corpus, default_models):
    m = default_models
    return build_instance(
        default_corpus.features, default_grid(), m.time_models, m.cluster_models, m.rd_classifiers
    )


@pytest.fixture(scope="session")
def small_corpus():
    return gen_corpus(seed=3, num_segments=80)


@pytest.fixture(scope="session")
def small_models(small_corpus):
    return build_models_from_corpus(small_corpus, k=4, seed=0, gbdt=GBDTParams(n_rounds=30))


def random_instance(rng: np.random.Generator, L: int, M: int):
    """Uniform random utilities, rates and times with budgets that sometimes bind."""
    from presetopt.core import Budgets
    from presetopt.solver import PlanningInstance

    u = rng.uniform(20.0, 50.0, (L, M))
    r = rng.uniform(1.0, 10.0, (L, M))
    t = rng.uniform(0.1, 2.0, (L, M))
    R = float(rng.uniform(r.min(axis=1).sum() * 0.9, r.max(axis=1).sum()))
    T = float(rng.uniform(t.min(axis=1).sum() * 0.9, t.max(axis=1).sum()))
    return PlanningInstance(u, r, t), Budgets(R, T)


SMALL_CONFIG = {"corpus_segments": 60, "sweep_runs": 20, "gbdt": {"n_rounds": 40}, "k_clusters": 4}


def run_pipeline(workdir, config_path, seed: int = 0) -> None:
    """Generate data, train every model, plan, sweep, and report inside ``workdir``."""
    from presetopt.cli import cli_main

    common = ["--out", str(workdir), "--config", str(config_path), "--seed", str(seed)]
    for cmd in (["gen-data"], ["cluster"], ["train-time"], ["train-rd"], ["plan"],
                ["sweep-rate"], ["sweep-time"], ["report"]):
        code = cli_main(cmd + common)
        assert code == 0, f"{cmd[0]} exited with {code}"


@pytest.fixture(scope="session")
def small_config_path(tmp_path_factory):
    import json

    path = tmp_path_factory.mktemp("cfg") / "small.json"
    path.write_text(json.dumps(SMALL_CONFIG))
    return path


@pytest.fixture(scope="session")
def trained_workdir(tmp_path_factory, small_config_path):
    workdir = tmp_path_factory.mktemp("work")
    run_pipeline(workdir, small_config_path)
    return workdir
