"""File formats: JSON models and stats, CSV datasets, binary proofs and commitments."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .fairness import AggregatedStats, Dataset, Model


class FileFormatError(ValueError):
    pass


def atomic_write(path, data: bytes | str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    raw = data.encode() if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _finite(values, what: str) -> np.ndarray:
    try:
        arr = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError):
        raise FileFormatError(f"{what} must be numbers") from None
    if not np.isfinite(arr).all():
        raise FileFormatError(f"{what} must be finite")
    return arr


def _json(text: str) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise FileFormatError("expected a JSON object")
    return obj


# -- models --------------------------------------------------------------------


def model_to_dict(model: Model) -> dict:
    out = {"kind": model.kind, "activation": model.activation}
    if model.kind == "lr":
        out["weights"] = [float(v) for v in model.weights]
    else:
        out["layers"] = [
            {"rows": int(w.shape[0]), "cols": int(w.shape[1]), "data": [float(v) for v in w.reshape(-1)]}
            for w in model.layers
        ]
    return out


def model_from_dict(obj: dict) -> Model:
    kind = obj.get("kind")
    activation = obj.get("activation", "sigmoid")
    if activation not in ("sigmoid", "relu"):
        raise FileFormatError(f"unknown activation {activation!r}")
    if kind == "lr":
        w = _finite(obj.get("weights"), "weights")
        if w.ndim != 1 or len(w) == 0:
            raise FileFormatError("weights must be a nonempty list")
        return Model.lr(w, activation)
    if kind == "mlp":
        layers = obj.get("layers")
        if not isinstance(layers, list) or not layers:
            raise FileFormatError("layers must be a nonempty list")
        mats = []
        for k, layer in enumerate(layers):
            if not isinstance(layer, dict):
                raise FileFormatError(f"layer {k} must be an object")
            rows, cols = layer.get("rows"), layer.get("cols")
            if not (isinstance(rows, int) and isinstance(cols, int) and rows > 0 and cols > 0):
                raise FileFormatError(f"layer {k} needs positive integer rows and cols")
            data = _finite(layer.get("data"), f"layer {k} data")
            if data.ndim != 1 or len(data) != rows * cols:
                raise FileFormatError(f"layer {k} data must have rows * cols entries")
            mats.append(data.reshape(rows, cols))
        return Model.mlp(mats, activation)
    raise FileFormatError(f"unknown model kind {kind!r}")


def dumps_model(model: Model) -> str:
    return json.dumps(model_to_dict(model), indent=2) + "\n"


def loads_model(text: str) -> Model:
    return model_from_dict(_json(text))


def load_model(path) -> Model:
    return loads_model(Path(path).read_text())


def save_model(path, model: Model) -> None:
    atomic_write(path, dumps_model(model))


# -- datasets --------------------------------------------------------------------


def dumps_dataset(data: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    f = data.num_features
    writer.writerow([f"f{i}" for i in range(f)] + ["s"] + ([] if data.y is None else ["y"]))
    for j in range(len(data.x)):
        row = [repr(float(v)) for v in data.x[j]] + [int(data.s[j])]
        if data.y is not None:
            row.append(int(data.y[j]))
        writer.writerow(row)
    return buf.getvalue()


def loads_dataset(text: str) -> Dataset:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise FileFormatError("empty dataset file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise FileFormatError("header must be f0..f{F-1}, s and optionally y")
    has_y = header[-1:] == ["y"]
    feats = header[: -2 if has_y else -1]
    if header[len(feats)] != "s" or feats != [f"f{i}" for i in range(len(feats))] or not feats:
        raise FileFormatError("header must be f0..f{F-1}, s and optionally y")
    body = [r for r in rows[1:] if r]
    if not body:
        raise FileFormatError("dataset has no rows")
    for k, r in enumerate(body):
        if len(r) != len(header):
            raise FileFormatError(f"row {k + 1} has {len(r)} fields, expected {len(header)}")
    try:
        table = np.array([[float(v) for v in r] for r in body], dtype=np.float64)
    except ValueError as exc:
        raise FileFormatError(f"unparseable value: {exc}") from None
    if not np.isfinite(table).all():
        raise FileFormatError("dataset values must be finite")
    f = len(feats)
    labels = table[:, f:]
    if not np.isin(labels, (0.0, 1.0)).all():
        raise FileFormatError("s and y must be 0 or 1")
    return Dataset(table[:, :f], labels[:, 0], labels[:, 1] if has_y else None)


def load_dataset(path) -> Dataset:
    return loads_dataset(Path(path).read_text())


def save_dataset(path, data: Dataset) -> None:
    atomic_write(path, dumps_dataset(data))


# -- stats -------------------------------------------------------------------------


def dumps_stats(stats: AggregatedStats) -> str:
    obj = {"mode": stats.mode, "delta_x": [float(v) for v in stats.delta_x], "Delta_x": [float(v) for v in stats.Delta_x]}
    return json.dumps(obj, indent=2) + "\n"


def loads_stats(text: str) -> AggregatedStats:
    obj = _json(text)
    mode = obj.get("mode", "sp")
    if mode not in ("sp", "eo"):
        raise FileFormatError(f"unknown mode {mode!r}")
    delta = _finite(obj.get("delta_x"), "delta_x")
    spread = _finite(obj.get("Delta_x"), "Delta_x")
    if delta.ndim != 1 or spread.ndim != 1 or len(delta) == 0:
        raise FileFormatError("delta_x and Delta_x must be nonempty lists")
    if (spread < 0).any():
        raise FileFormatError("Delta_x must be non-negative")
    return AggregatedStats(delta, spread, mode)


def load_stats(path) -> AggregatedStats:
    return loads_stats(Path(path).read_text())


def save_stats(path, stats: AggregatedStats) -> None:
    atomic_write(path, dumps_stats(stats))
