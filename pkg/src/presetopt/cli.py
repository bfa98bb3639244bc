"""Command-line front end for the planning pipeline.

A working directory (``--out``) collects every stage's files, so the stages
chain without extra flags::

    presetopt gen-data --out work
    presetopt cluster --out work
    presetopt train-time --out work
    presetopt train-rd --out work
    presetopt plan --out work
    presetopt report --out work

Exit codes: 0 success, 1 usage error, 2 data error, 3 infeasible plan.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path
from typing import Sequence

from . import data_io
from .config import CONFIG_ENV_VAR, Config, load_config
from .core import Preset, ValidationError
from .evaluation import (
    DEFAULT_TIME_AXIS_S,
    SweepReport,
    bd_rate,
    mean_speed_rank,
    default_rate_axis,
    summarize_plan,
    sweep_bd_rate,
    sweep_rate_budget,
    sweep_time_budget,
)
from .pipeline import ModelSet, build_instance, fit_cluster_models, fit_rd_classifiers, fit_time_models
from .predictors import select_time_features
from .solver import solve_bb
from .synth import gen_corpus

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE = 0, 1, 2, 3

TIME_TABLE = "time_table.csv"
RD_TABLE = "rd_table.csv"
FEATURES = "features.csv"
LABELS = "labels.csv"
CLUSTERS = "clusters.json"
TIME_MODELS = "time_models.json"
RD_MODELS = "rd_models.json"
SELECTED = "selected_features.json"
PLAN = "plan.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2
        raise UsageError(message)


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _inp(args, name: str, default: str) -> Path:
    value = getattr(args, name, None)
    return Path(value) if value else args.out / default


def _models(args) -> ModelSet:
    paths = args.models or [args.out / f for f in (CLUSTERS, TIME_MODELS, RD_MODELS)]
    return data_io.merge_models(data_io.load_models(p) for p in paths)


def _segments(args, cfg: Config):
    feats = data_io.load_feature_table(_inp(args, "features", FEATURES))
    if getattr(args, "id_prefix", None):
        feats = [f for f in feats if f.segment_id.startswith(args.id_prefix)]
    if not feats:
        raise ValidationError("no segments match the selection")
    return feats


# --------------------------------------------------------------------------- commands


def cmd_gen_data(args, cfg: Config) -> int:
    corpus = gen_corpus(
        seed=args.seed,
        num_segments=args.num_segments or cfg.corpus_segments,
        hard=args.hard or cfg.hard_corpus,
        presets=cfg.grid.presets,
        bitrates_kbps=cfg.bitrates_kbps,
        duration_s=cfg.segment_duration_s,
    )
    args.out.mkdir(parents=True, exist_ok=True)
    data_io.write_time_table(corpus.time_rows, args.out / TIME_TABLE)
    data_io.write_rd_table(corpus.rd_records, args.out / RD_TABLE)
    data_io.write_feature_table(corpus.features, args.out / FEATURES)
    print(f"wrote {len(corpus.segments)} segments, {len(corpus.time_rows)} timing rows, "
          f"{len(corpus.rd_records)} R-D curves to {args.out}")
    return EXIT_OK


def cmd_cluster(args, cfg: Config) -> int:
    records = data_io.load_rd_table(_inp(args, "rd_table", RD_TABLE))
    curves: dict[Preset, list] = {}
    ids: dict[Preset, list[str]] = {}
    for feats, preset, curve in records:
        curves.setdefault(preset, []).append(curve)
        ids.setdefault(preset, []).append(feats.segment_id)
    models, labels = fit_cluster_models(
        curves, k=cfg.k_clusters, seed=args.seed, max_iter=cfg.kmeans.max_iter, tol=cfg.kmeans.tol
    )
    args.out.mkdir(parents=True, exist_ok=True)
    data_io.save_models(args.out / CLUSTERS, ModelSet(cluster_models=models))
    data_io.write_labels(labels, ids, args.out / LABELS)
    for p, m in models.items():
        print(f"{p}: k={m.k} inertia={m.inertia:.4f} iterations={len(m.inertia_history) - 1}")
    return EXIT_OK


def _time_rows(args, cfg: Config):
    rows = data_io.load_time_table(_inp(args, "time_table", TIME_TABLE))
    by_preset: dict[Preset, list] = {}
    for r in rows:
        by_preset.setdefault(r.preset, []).append(r)
    return by_preset


def cmd_train_time(args, cfg: Config) -> int:
    by_preset = _time_rows(args, cfg)
    selected = None
    if args.selected:
        raw = json.loads(Path(args.selected).read_text(encoding="utf-8"))
        selected = {Preset.parse(k): tuple(v) for k, v in raw.items()}
    models = fit_time_models(by_preset, cfg.gbdt, selected)
    args.out.mkdir(parents=True, exist_ok=True)
    data_io.save_models(args.out / TIME_MODELS, ModelSet(time_models=models))
    for p, m in models.items():
        print(f"{p}: {len(m.trees)} trees, train RMSE {m.booster.train_rmse[-1]:.5f} s")
    return EXIT_OK


def cmd_select_features(args, cfg: Config) -> int:
    by_preset = _time_rows(args, cfg)
    presets = [Preset.parse(args.preset)] if args.preset else list(by_preset)
    out = {}
    for p in presets:
        if p not in by_preset:
            raise ValidationError(f"no timing rows for preset {p}")
        keep = select_time_features(by_preset[p], cfg.gbdt, folds=args.folds, seed=args.seed)
        out[p.label] = list(keep)
        print(f"{p}: kept {len(keep)} features")
    _write_text(args.out / SELECTED, _dump_json(out))
    return EXIT_OK


def cmd_train_rd(args, cfg: Config) -> int:
    records = data_io.load_rd_table(_inp(args, "rd_table", RD_TABLE))
    labels = data_io.load_labels(_inp(args, "labels", LABELS))
    models = fit_rd_classifiers(data_io.rd_rows_from_labels(records, labels), cfg.svm)
    args.out.mkdir(parents=True, exist_ok=True)
    data_io.save_models(args.out / RD_MODELS, ModelSet(rd_classifiers=models))
    for p, m in models.items():
        print(f"{p}: {len(m.classes)} classes")
    return EXIT_OK


def _plan_record(sol, inst, budgets) -> dict:
    record = {
        "status": sol.status,
        "budgets": {"rate_kbps": budgets.rate_threshold_kbps, "time_s": budgets.time_threshold_s},
        "segments": [],
        "totals": None,
        "minimum_totals": {"rate_kbps": sol.min_total_rate, "time_s": sol.min_total_time},
    }
    if sol.feasible:
        totals = summarize_plan(sol, inst)
        for i, j in enumerate(sol.choice):
            pt = inst.grid[j]
            record["segments"].append({
                "segment_id": inst.segment_ids[i],
                "preset": pt.preset.label,
                "bitrate_kbps": pt.bitrate_kbps,
                "predicted_time_s": float(inst.time[i, j]),
                "predicted_psnr_db": float(inst.utility[i, j]),
            })
        record["totals"] = {
            "psnr_db": totals.total_psnr_db,
            "rate_kbps": totals.total_rate_kbps,
            "time_s": totals.total_time_s,
        }
    return record


def cmd_plan(args, cfg: Config) -> int:
    feats = _segments(args, cfg)
    if args.segments:
        wanted = [s.strip() for s in args.segments.split(",") if s.strip()]
        by_id = {f.segment_id: f for f in feats}
        missing = [s for s in wanted if s not in by_id]
        if missing:
            raise ValidationError(f"unknown segment ids {missing}")
        window = [by_id[s] for s in wanted]
    else:
        window = feats[args.start:args.start + cfg.num_segments]
        if len(window) < cfg.num_segments:
            raise ValidationError(
                f"need {cfg.num_segments} segments from index {args.start}, found {len(window)}"
            )
    grid = cfg.grid
    models = _models(args)
    inst = build_instance(window, grid, models.time_models, models.cluster_models, models.rd_classifiers)
    budgets = cfg.budgets
    t0 = time.perf_counter()
    sol = solve_bb(inst, budgets)
    elapsed_ms = (time.perf_counter() - t0) * 1000.0
    record = _plan_record(sol, inst, budgets)
    _write_text(args.out / PLAN, _dump_json(record))
    print(f"solve: {elapsed_ms:.2f} ms, {sol.nodes_explored} nodes", file=sys.stderr)
    if not sol.feasible:
        print(
            f"infeasible: minimum achievable time {sol.min_total_time:.4f} s "
            f"(budget {budgets.time_threshold_s} s), minimum achievable rate "
            f"{sol.min_total_rate:.1f} kbps (budget {budgets.rate_threshold_kbps} kbps)",
            file=sys.stderr,
        )
        return EXIT_INFEASIBLE
    t = record["totals"]
    print(f"status {sol.status}: PSNR {t['psnr_db']:.3f} dB, rate {t['rate_kbps']:.0f} kbps, "
          f"time {t['time_s']:.3f} s")
    return EXIT_OK


def _write_sweep(report: SweepReport, out: Path, stem: str) -> None:
    _write_text(out / f"{stem}.csv", report.to_csv())
    _write_text(out / f"{stem}.json", report.to_json())


def cmd_sweep_rate(args, cfg: Config) -> int:
    feats = _segments(args, cfg)
    budgets = tuple(args.rate_budgets) if args.rate_budgets else default_rate_axis(
        cfg.num_segments, cfg.bitrates_kbps
    )
    report = sweep_rate_budget(
        feats, cfg.grid, _models(args), budgets, cfg.time_threshold_s,
        runs=args.runs or cfg.sweep_runs, seed=args.seed, num_segments=cfg.num_segments,
    )
    _write_sweep(report, args.out, "sweep_rate")
    for r in report.rows:
        print(f"R_th {r.axis_value:g}: planner {r.planner_mean_psnr_db / cfg.num_segments:.3f} dB, "
              f"baseline {r.baseline_mean_psnr_db / cfg.num_segments:.3f} dB, "
              f"infeasible {r.planner_infeasible}")
    try:
        print(f"BD-rate (planner vs {report.baseline}): {sweep_bd_rate(report):.2f}%")
    except ValidationError as exc:
        print(f"BD-rate unavailable: {exc}", file=sys.stderr)
    return EXIT_OK


def cmd_sweep_time(args, cfg: Config) -> int:
    feats = _segments(args, cfg)
    budgets = tuple(args.time_budgets) if args.time_budgets else DEFAULT_TIME_AXIS_S
    report = sweep_time_budget(
        feats, cfg.grid, _models(args), budgets, cfg.rate_threshold_kbps,
        runs=args.runs or cfg.sweep_runs, seed=args.seed, num_segments=cfg.num_segments,
    )
    _write_sweep(report, args.out, "sweep_time")
    for r in report.rows:
        hist = " ".join(f"{k}={v}" for k, v in r.preset_histogram.items())
        rank = mean_speed_rank(r)
        rank_text = "n/a" if math.isnan(rank) else f"{rank:.3f}"
        print(f"T_th {r.axis_value:g}: infeasible {r.planner_infeasible}/{r.runs}, "
              f"mean speed rank {rank_text}, {hist}")
    return EXIT_OK


def cmd_bd_rate(args, cfg: Config) -> int:
    anchor = data_io.load_curve(args.anchor)
    test = data_io.load_curve(args.test)
    value = bd_rate(anchor, test)
    _write_text(args.out / "bd_rate.json", _dump_json({"bd_rate_percent": value}))
    print(f"{value:.2f}")
    return EXIT_OK


def cmd_report(args, cfg: Config) -> int:
    plan_path = _inp(args, "plan", PLAN)
    plan = json.loads(plan_path.read_text(encoding="utf-8"))
    rows: list[tuple[str, str, object]] = [("plan", "status", plan["status"])]
    for seg in plan.get("segments", []):
        for key in ("preset", "bitrate_kbps", "predicted_time_s", "predicted_psnr_db"):
            rows.append(("plan", f"{seg['segment_id']}.{key}", seg[key]))
    for key, value in sorted((plan.get("totals") or {}).items()):
        rows.append(("plan", f"total.{key}", value))
    sweeps = args.sweeps or [p for p in (args.out / "sweep_rate.json", args.out / "sweep_time.json")
                             if p.is_file()]
    for path in sweeps:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        name = Path(path).stem
        for r in data["rows"]:
            axis = f"{r['axis_value']:g}"
            for key in ("planner_mean_psnr_db", "baseline_mean_psnr_db", "planner_infeasible",
                        "strict_wins"):
                rows.append((name, f"{axis}.{key}", r[key]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("source", "metric", "value"))
    for src, metric, value in rows:
        w.writerow((src, metric, repr(value) if isinstance(value, float) else value))
    _write_text(args.out / "report.csv", buf.getvalue())
    _write_text(args.out / "report.json", _dump_json(
        [{"source": s, "metric": m, "value": v} for s, m, v in rows]
    ))
    print(f"wrote {len(rows)} report rows to {args.out / 'report.csv'}")
    return EXIT_OK


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="presetopt", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("--config", default=None,
                       help=f"JSON config file (default: ${CONFIG_ENV_VAR}, else built-in)")
        p.add_argument("--out", type=Path, default=Path("."), help="working/output directory")
        p.set_defaults(func=func)
        return p

    p = add("gen-data", cmd_gen_data, "generate a synthetic corpus")
    p.add_argument("--num-segments", type=int, default=None)
    p.add_argument("--hard", action="store_true", help="add curvature to the true R-D curves")

    p = add("cluster", cmd_cluster, "cluster R-D curves per preset")
    p.add_argument("--rd-table")

    p = add("train-time", cmd_train_time, "train per-preset transcoding-time regressors")
    p.add_argument("--time-table")
    p.add_argument("--selected", help="JSON of selected features per preset")

    p = add("select-features", cmd_select_features, "backward feature elimination for time models")
    p.add_argument("--time-table")
    p.add_argument("--preset")
    p.add_argument("--folds", type=int, default=5)

    p = add("train-rd", cmd_train_rd, "train per-preset R-D class predictors")
    p.add_argument("--rd-table")
    p.add_argument("--labels")

    def with_models(p):
        p.add_argument("--features")
        p.add_argument("--models", nargs="+", type=Path, help="model files (merged in order)")
        p.add_argument("--id-prefix", help="only use segments whose id starts with this")

    p = add("plan", cmd_plan, "choose one operating point per segment")
    with_models(p)
    p.add_argument("--segments", help="comma-separated segment ids")
    p.add_argument("--start", type=int, default=0, help="first segment index of the window")

    p = add("sweep-rate", cmd_sweep_rate, "sweep the rate budget against the baseline")
    with_models(p)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--rate-budgets", type=float, nargs="+")

    p = add("sweep-time", cmd_sweep_time, "sweep the time budget and record preset usage")
    with_models(p)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--time-budgets", type=float, nargs="+")

    p = add("bd-rate", cmd_bd_rate, "BD-rate of a test curve against an anchor curve")
    p.add_argument("--anchor", required=True)
    p.add_argument("--test", required=True)

    p = add("report", cmd_report, "collect the plan and sweep results into one table")
    p.add_argument("--plan")
    p.add_argument("--sweeps", nargs="+", type=Path)
    return parser


def cli_main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"presetopt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    try:
        cfg = load_config(args.config)
        if args.seed is None:
            args.seed = cfg.seed
        return args.func(args, cfg)
    except (ValidationError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"presetopt {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
