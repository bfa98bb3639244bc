import json

import pytest

from presetopt.cli import cli_main
from presetopt.data_io import write_curve
from presetopt.rdmodel import RDCurve


def _run(workdir, cfg, *args):
    return cli_main(list(args) + ["--out", str(workdir), "--config", str(cfg)])


def test_pipeline_writes_every_artifact(trained_workdir):
    for name in ("time_table.csv", "rd_table.csv", "features.csv", "labels.csv", "clusters.json",
                 "time_models.json", "rd_models.json", "plan.json", "sweep_rate.csv",
                 "sweep_time.csv", "report.csv", "report.json"):
        assert (trained_workdir / name).is_file(), name


def test_plan_within_budgets(trained_workdir):
    plan = json.loads((trained_workdir / "plan.json").read_text())
    assert plan["status"] == "optimal"
    assert len(plan["segments"]) == 6
    assert plan["totals"]["rate_kbps"] <= 30000 and plan["totals"]["time_s"] <= 11
    assert sum(s["bitrate_kbps"] for s in plan["segments"]) == plan["totals"]["rate_kbps"]


def test_infeasible_time_budget_exit_code(trained_workdir, tmp_path, capsys):
    cfg = tmp_path / "tight.json"
    cfg.write_text(json.dumps({"time_threshold_s": 0.001, "k_clusters": 4}))
    out = tmp_path / "o"
    code = cli_main(["plan", "--out", str(out), "--config", str(cfg),
                     "--features", str(trained_workdir / "features.csv"), "--models",
                     *(str(trained_workdir / f) for f in ("clusters.json", "time_models.json",
                                                          "rd_models.json"))])
    assert code == 3
    err = capsys.readouterr().err
    assert "minimum achievable time" in err and "minimum achievable rate" in err
    plan = json.loads((out / "plan.json").read_text())
    assert plan["status"] == "infeasible" and plan["minimum_totals"]["time_s"] > 0.001


def test_bd_rate_identical_curves(tmp_path, capsys, small_config_path):
    curve = RDCurve((100.0, 200.0, 400.0, 800.0), (30.0, 33.0, 35.5, 37.25))
    write_curve(curve, tmp_path / "a.csv")
    code = _run(tmp_path, small_config_path, "bd-rate", "--anchor", str(tmp_path / "a.csv"),
                "--test", str(tmp_path / "a.csv"))
    assert code == 0
    assert capsys.readouterr().out.strip() in ("0.00", "-0.00")


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["plan", "--start", "abc"], ["bd-rate"]])
def test_usage_errors_exit_one(argv, tmp_path):
    assert cli_main(argv) == 1


def test_missing_input_is_a_data_error(tmp_path, small_config_path):
    assert _run(tmp_path, small_config_path, "cluster") == 2
    assert _run(tmp_path, small_config_path, "bd-rate", "--anchor", str(tmp_path / "no.csv"),
                "--test", str(tmp_path / "no.csv")) == 2


def test_bad_config_is_a_data_error(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"k_clusters": -1}')
    assert cli_main(["gen-data", "--out", str(tmp_path), "--config", str(cfg)]) == 2


def test_selection_with_no_matching_segments(trained_workdir, small_config_path, tmp_path):
    code = cli_main(["plan", "--out", str(tmp_path), "--config", str(small_config_path),
                     "--features", str(trained_workdir / "features.csv"),
                     "--id-prefix", "no-such-prefix"])
    assert code == 2
