"""CSV measurement tables and the JSON model container.

Tables are UTF-8 CSV with a required header and '.' decimals. Ingestion is
strict: unknown or missing columns and unparsable cells are errors that name
the column or the line. Floats are written with ``repr`` so a write/read
round trip is exact.

Model files hold one header line (format, version, sha256 of the payload)
followed by the canonical JSON payload.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import FEATURE_NAMES, Preset, SegmentFeatures, ValidationError
from .pipeline import ModelSet
from .predictors import GBDTParams, RDClassModel, RDRow, SVMParams, Standardizer, TimeModel, TimeRow
from .predictors.gbdt import BoostedTrees, Tree
from .predictors.svm import BinarySVM, Kernel, OneVsRestSVM
from .rdmodel import ClusterModel, LogCurve, RDCurve

FEATURE_COLUMNS = ("segment_id", "duration_s") + FEATURE_NAMES
TIME_COLUMNS = FEATURE_COLUMNS + ("preset", "target_bitrate_kbps", "transcode_time_s")
PSNR_PREFIX = "psnr_at_"
MODEL_FORMAT = "presetopt-models"
MODEL_VERSION = 1


class ModelFileError(ValidationError):
    pass


class ChecksumError(ModelFileError):
    pass


class VersionError(ModelFileError):
    pass


# --------------------------------------------------------------------------- CSV


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Preset):
        return v.label
    return str(v)


def _write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _read_csv(path) -> tuple[list[str], list[tuple[int, dict[str, str]]]]:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"{path}: no such file")
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file, a header is required") from None
        if len(set(header)) != len(header):
            dup = next(h for h in header if header.count(h) > 1)
            raise ValidationError(f"{path}: duplicate column {dup!r}")
        rows = []
        for line_no, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(header):
                raise ValidationError(
                    f"{path}:{line_no}: expected {len(header)} cells, found {len(cells)}"
                )
            rows.append((line_no, dict(zip(header, cells))))
    return header, rows


def _check_columns(path, header: Sequence[str], expected: Sequence[str]) -> None:
    for col in header:
        if col not in expected:
            raise ValidationError(f"{path}: unknown column {col!r}")
    for col in expected:
        if col not in header:
            raise ValidationError(f"{path}: missing column {col!r}")


def _parse(path, line_no: int, row: dict[str, str], col: str, kind=float):
    raw = row[col].strip()
    if raw == "":
        raise ValidationError(f"{path}:{line_no}: missing value in column {col!r}")
    try:
        value = kind(raw)
    except ValueError:
        raise ValidationError(f"{path}:{line_no}: column {col!r} cannot parse {raw!r}") from None
    if isinstance(value, float) and not math.isfinite(value):
        raise ValidationError(f"{path}:{line_no}: column {col!r} is not finite")
    return value


def _features(path, line_no: int, row: dict[str, str]) -> SegmentFeatures:
    data: dict = {"segment_id": row["segment_id"]}
    if not data["segment_id"].strip():
        raise ValidationError(f"{path}:{line_no}: missing value in column 'segment_id'")
    for col in FEATURE_COLUMNS[1:]:
        data[col] = _parse(path, line_no, row, col)
    try:
        return SegmentFeatures.from_dict(data)
    except ValidationError as exc:
        raise ValidationError(f"{path}:{line_no}: {exc}") from None


def _feature_cells(f: SegmentFeatures) -> list:
    return [f.segment_id, f.duration_s] + [getattr(f, n) for n in FEATURE_NAMES]


def write_feature_table(features: Sequence[SegmentFeatures], path) -> None:
    _write_csv(path, FEATURE_COLUMNS, (_feature_cells(f) for f in features))


def load_feature_table(path) -> list[SegmentFeatures]:
    header, rows = _read_csv(path)
    _check_columns(path, header, FEATURE_COLUMNS)
    return [_features(path, n, row) for n, row in rows]


def write_time_table(rows: Sequence[TimeRow], path) -> None:
    _write_csv(
        path,
        TIME_COLUMNS,
        (_feature_cells(r.features) + [r.preset, r.target_bitrate_kbps, r.transcode_time_s]
         for r in rows),
    )


def load_time_table(path) -> list[TimeRow]:
    header, rows = _read_csv(path)
    _check_columns(path, header, TIME_COLUMNS)
    out = []
    for n, row in rows:
        feats = _features(path, n, row)
        try:
            preset = Preset.parse(row["preset"])
            out.append(TimeRow(
                feats,
                preset,
                _parse(path, n, row, "target_bitrate_kbps", int),
                _parse(path, n, row, "transcode_time_s"),
            ))
        except ValidationError as exc:
            raise ValidationError(f"{path}:{n}: {exc}") from None
    return out


def _psnr_column(kbps) -> str:
    return f"{PSNR_PREFIX}{kbps}"


def write_rd_table(records: Sequence[tuple[SegmentFeatures, Preset, RDCurve]], path) -> None:
    if not records:
        raise ValidationError("an R-D table needs at least one record to fix its bitrate grid")
    grid = records[0][2].bitrates_kbps
    for _, _, curve in records:
        if curve.bitrates_kbps != grid:
            raise ValidationError("all R-D curves in one table must share a bitrate grid")
    cols = [_psnr_column(int(b) if float(b).is_integer() else b) for b in grid]
    _write_csv(
        path,
        list(FEATURE_COLUMNS) + ["preset"] + cols,
        (_feature_cells(f) + [p] + list(c.psnr_db) for f, p, c in records),
    )


def load_rd_table(path) -> list[tuple[SegmentFeatures, Preset, RDCurve]]:
    header, rows = _read_csv(path)
    psnr_cols = [h for h in header if h.startswith(PSNR_PREFIX)]
    _check_columns(path, header, list(FEATURE_COLUMNS) + ["preset"] + psnr_cols)
    if len(psnr_cols) < 2:
        raise ValidationError(f"{path}: need at least two {PSNR_PREFIX}<kbps> columns")
    rates = []
    for col in psnr_cols:
        try:
            rates.append(float(col[len(PSNR_PREFIX):]))
        except ValueError:
            raise ValidationError(f"{path}: bad bitrate in column {col!r}") from None
    for prev, (col, r) in zip(rates, list(zip(psnr_cols, rates))[1:]):
        if not r > prev:
            raise ValidationError(f"{path}: bitrate columns must increase, {col!r} does not")
    out = []
    for n, row in rows:
        feats = _features(path, n, row)
        try:
            preset = Preset.parse(row["preset"])
            curve = RDCurve(tuple(rates), tuple(_parse(path, n, row, c) for c in psnr_cols))
        except ValidationError as exc:
            raise ValidationError(f"{path}:{n}: {exc}") from None
        out.append((feats, preset, curve))
    return out


def write_curve(curve: RDCurve, path) -> None:
    _write_csv(path, ("bitrate_kbps", "psnr_db"), zip(curve.bitrates_kbps, curve.psnr_db))


def load_curve(path) -> RDCurve:
    """A two-column (bitrate_kbps, psnr_db) curve file, as used by BD-rate."""
    header, rows = _read_csv(path)
    _check_columns(path, header, ("bitrate_kbps", "psnr_db"))
    try:
        return RDCurve(
            tuple(_parse(path, n, r, "bitrate_kbps") for n, r in rows),
            tuple(_parse(path, n, r, "psnr_db") for n, r in rows),
        )
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def write_labels(labels: dict[Preset, list[int]], ids: dict[Preset, list[str]], path) -> None:
    _write_csv(
        path,
        ("segment_id", "preset", "cluster"),
        ((sid, p, c) for p in labels for sid, c in zip(ids[p], labels[p])),
    )


def load_labels(path) -> dict[tuple[str, Preset], int]:
    header, rows = _read_csv(path)
    _check_columns(path, header, ("segment_id", "preset", "cluster"))
    out = {}
    for n, row in rows:
        try:
            out[(row["segment_id"], Preset.parse(row["preset"]))] = _parse(path, n, row, "cluster", int)
        except ValidationError as exc:
            raise ValidationError(f"{path}:{n}: {exc}") from None
    return out


def rd_rows_from_labels(
    records: Sequence[tuple[SegmentFeatures, Preset, RDCurve]],
    labels: dict[tuple[str, Preset], int],
) -> dict[Preset, list[RDRow]]:
    out: dict[Preset, list[RDRow]] = {}
    for feats, preset, _ in records:
        key = (feats.segment_id, preset)
        if key not in labels:
            raise ValidationError(f"no cluster label for segment {key[0]!r} under {preset}")
        out.setdefault(preset, []).append(RDRow(feats, preset, labels[key]))
    return out


# --------------------------------------------------------------------------- models


def _arr(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def _cluster_to_dict(m: ClusterModel) -> dict:
    return {
        "preset": m.preset.label,
        "k": m.k,
        "bitrates_kbps": list(m.bitrates_kbps),
        "centroids": _arr(m.centroids),
        "fitted": [[c.a, c.b] for c in m.fitted],
        "inertia": m.inertia,
        "seed": m.seed,
        "inertia_history": list(m.inertia_history),
    }


def _cluster_from_dict(d: dict) -> ClusterModel:
    return ClusterModel(
        preset=Preset.parse(d["preset"]),
        k=int(d["k"]),
        bitrates_kbps=tuple(float(b) for b in d["bitrates_kbps"]),
        centroids=np.asarray(d["centroids"], dtype=float).reshape(int(d["k"]), -1),
        fitted=tuple(LogCurve(float(a), float(b)) for a, b in d["fitted"]),
        inertia=float(d["inertia"]),
        seed=int(d["seed"]),
        inertia_history=tuple(float(v) for v in d["inertia_history"]),
    )


def _time_to_dict(m: TimeModel) -> dict:
    return {
        "preset": m.preset.label,
        "feature_names": list(m.feature_names),
        "params": vars(m.params).copy(),
        "base_prediction": m.booster.base_prediction,
        "learning_rate": m.booster.learning_rate,
        "train_rmse": list(m.booster.train_rmse),
        "trees": [t.to_dict() for t in m.booster.trees],
    }


def _time_from_dict(d: dict) -> TimeModel:
    booster = BoostedTrees(
        float(d["base_prediction"]),
        float(d["learning_rate"]),
        tuple(Tree.from_dict(t) for t in d["trees"]),
        tuple(float(v) for v in d["train_rmse"]),
    )
    return TimeModel(
        Preset.parse(d["preset"]), tuple(d["feature_names"]), booster, GBDTParams(**d["params"])
    )


def _machine_to_dict(m: BinarySVM) -> dict:
    return {
        "support_vectors": _arr(m.support_vectors),
        "dual_coef": _arr(m.dual_coef),
        "bias": m.bias,
        "alphas": _arr(m.alphas),
        "kkt_gap": m.kkt_gap,
        "iterations": m.iterations,
    }


def _machine_from_dict(d: dict, dim: int) -> BinarySVM:
    return BinarySVM(
        support_vectors=np.asarray(d["support_vectors"], dtype=float).reshape(-1, dim),
        dual_coef=np.asarray(d["dual_coef"], dtype=float),
        bias=float(d["bias"]),
        alphas=np.asarray(d["alphas"], dtype=float),
        kkt_gap=float(d["kkt_gap"]),
        iterations=int(d["iterations"]),
    )


def _classifier_to_dict(m: RDClassModel) -> dict:
    k = m.svm.kernel
    return {
        "preset": m.preset.label,
        "feature_names": list(m.feature_names),
        "scaler_mean": _arr(m.scaler.mean),
        "scaler_std": _arr(m.scaler.std),
        "gamma": m.gamma,
        "params": vars(m.params).copy(),
        "classes": list(m.svm.classes),
        "kernel": {"kind": k.kind, "gamma": k.gamma, "degree": k.degree, "coef0": k.coef0},
        "machines": [_machine_to_dict(x) for x in m.svm.machines],
    }


def _classifier_from_dict(d: dict) -> RDClassModel:
    dim = len(d["feature_names"])
    svm = OneVsRestSVM(
        tuple(int(c) for c in d["classes"]),
        tuple(_machine_from_dict(x, dim) for x in d["machines"]),
        Kernel(**d["kernel"]),
    )
    scaler = Standardizer(
        np.asarray(d["scaler_mean"], dtype=float), np.asarray(d["scaler_std"], dtype=float)
    )
    return RDClassModel(
        Preset.parse(d["preset"]), tuple(d["feature_names"]), scaler, float(d["gamma"]),
        svm, SVMParams(**d["params"]),
    )


def models_to_payload(models: ModelSet) -> dict:
    return {
        "cluster_models": [_cluster_to_dict(m) for m in models.cluster_models.values()],
        "time_models": [_time_to_dict(m) for m in models.time_models.values()],
        "rd_classifiers": [_classifier_to_dict(m) for m in models.rd_classifiers.values()],
    }


def models_from_payload(payload: dict) -> ModelSet:
    try:
        clusters = [_cluster_from_dict(d) for d in payload["cluster_models"]]
        times = [_time_from_dict(d) for d in payload["time_models"]]
        classifiers = [_classifier_from_dict(d) for d in payload["rd_classifiers"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"malformed model payload: {exc!r}") from None
    return ModelSet(
        {m.preset: m for m in clusters},
        {m.preset: m for m in times},
        {m.preset: m for m in classifiers},
    )


def save_models(path, models: ModelSet) -> None:
    body = json.dumps(models_to_payload(models), sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    header = json.dumps({"format": MODEL_FORMAT, "version": MODEL_VERSION, "sha256": digest},
                        sort_keys=True)
    Path(path).write_text(header + "\n" + body + "\n", encoding="utf-8")


def load_models(path) -> ModelSet:
    path = Path(path)
    if not path.is_file():
        raise ModelFileError(f"{path}: no such file")
    raw = path.read_bytes()
    head, sep, body = raw.partition(b"\n")
    try:
        header = json.loads(head.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise ChecksumError(f"{path}: unreadable header, the file is corrupt or truncated") from None
    if not isinstance(header, dict) or header.get("format") != MODEL_FORMAT:
        raise ModelFileError(f"{path}: not a model file")
    if header.get("version") != MODEL_VERSION:
        raise VersionError(
            f"{path}: model format version {header.get('version')} is not supported "
            f"(expected {MODEL_VERSION})"
        )
    body = body[:-1] if body.endswith(b"\n") else body
    if not sep or hashlib.sha256(body).hexdigest() != header.get("sha256"):
        raise ChecksumError(f"{path}: checksum mismatch, the file is corrupt or truncated")
    return models_from_payload(json.loads(body.decode("utf-8")))


def merge_models(parts: Iterable[ModelSet]) -> ModelSet:
    """Union of several containers; a later part overrides an earlier one per preset."""
    out = ModelSet()
    for m in parts:
        out.cluster_models.update(m.cluster_models)
        out.time_models.update(m.time_models)
        out.rd_classifiers.update(m.rd_classifiers)
    return out
