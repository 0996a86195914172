"""Reference fairness computations over the reals.

These are the ground truth for the proof pipelines: aggregated dataset
statistics, the model-only fairness bounds for logistic regression and
multilayer networks, empirical group metrics, and plain inference.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .spectral import spectral_norm_real

LIPSCHITZ = {"sigmoid": 0.25, "relu": 1.0}


class DimensionMismatch(ValueError):
    pass


class EmptyGroupError(ValueError):
    pass


@dataclass
class Model:
    """Logistic regression (``weights``) or an MLP (``layers``).

    Layer l maps F_l inputs to F_{l+1} outputs, so its matrix has shape
    (F_{l+1}, F_l); the last layer has one output row.
    """

    kind: Literal["lr", "mlp"]
    weights: np.ndarray | None = None
    layers: list[np.ndarray] = field(default_factory=list)
    activation: Literal["sigmoid", "relu"] = "sigmoid"

    def __post_init__(self):
        if self.activation not in LIPSCHITZ:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.kind == "lr":
            if self.weights is None:
                raise ValueError("logistic regression needs a weight vector")
            self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        elif self.kind == "mlp":
            self.layers = [np.atleast_2d(np.asarray(w, dtype=np.float64)) for w in self.layers]
            if not self.layers:
                raise ValueError("an MLP needs at least one layer")
            for a, b in zip(self.layers, self.layers[1:]):
                if b.shape[1] != a.shape[0]:
                    raise DimensionMismatch(f"dimension mismatch: layer of shape {b.shape} after {a.shape}")
            if self.layers[-1].shape[0] != 1:
                raise DimensionMismatch("dimension mismatch: the last layer must have one output")
        else:
            raise ValueError(f"unknown model kind {self.kind!r}")

    @property
    def lipschitz(self) -> float:
        return LIPSCHITZ[self.activation]

    @property
    def input_dim(self) -> int:
        return len(self.weights) if self.kind == "lr" else self.layers[0].shape[1]

    @staticmethod
    def lr(weights, activation: str = "sigmoid") -> "Model":
        return Model("lr", weights=weights, activation=activation)

    @staticmethod
    def mlp(layers, activation: str = "sigmoid") -> "Model":
        return Model("mlp", layers=list(layers), activation=activation)


@dataclass
class Dataset:
    x: np.ndarray  # N x F0
    s: np.ndarray  # N binary sensitive attributes
    y: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=np.float64))
        self.s = np.asarray(self.s).astype(np.int64).reshape(-1)
        if len(self.s) != len(self.x):
            raise DimensionMismatch("dimension mismatch: s and x have different row counts")
        if not np.isin(self.s, (0, 1)).all():
            raise ValueError("s must be binary")
        if self.y is not None:
            self.y = np.asarray(self.y).astype(np.int64).reshape(-1)
            if len(self.y) != len(self.x):
                raise DimensionMismatch("dimension mismatch: y and x have different row counts")
            if not np.isin(self.y, (0, 1)).all():
                raise ValueError("y must be binary")

    @property
    def num_features(self) -> int:
        return self.x.shape[1]

    def positives(self) -> "Dataset":
        if self.y is None:
            raise ValueError("equal opportunity needs labels")
        keep = self.y == 1
        return Dataset(self.x[keep], self.s[keep], self.y[keep])


@dataclass
class AggregatedStats:
    delta_x: np.ndarray  # mean of group 0 minus mean of group 1
    Delta_x: np.ndarray  # largest deviation from the own-group mean
    mode: Literal["sp", "eo"] = "sp"

    def __post_init__(self):
        self.delta_x = np.asarray(self.delta_x, dtype=np.float64).reshape(-1)
        self.Delta_x = np.asarray(self.Delta_x, dtype=np.float64).reshape(-1)
        if self.delta_x.shape != self.Delta_x.shape:
            raise DimensionMismatch("dimension mismatch: delta_x and Delta_x differ in length")
        if np.any(self.Delta_x < 0):
            raise ValueError("Delta_x must be non-negative")

    @property
    def num_features(self) -> int:
        return len(self.delta_x)


def group_means(x: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if not (s == 0).any() or not (s == 1).any():
        raise EmptyGroupError("both sensitive groups must be nonempty")
    return x[s == 0].mean(axis=0), x[s == 1].mean(axis=0)


def aggregate_stats(data: Dataset, mode: str = "sp") -> AggregatedStats:
    if mode not in ("sp", "eo"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "eo":
        data = data.positives()
    mu0, mu1 = group_means(data.x, data.s)
    dev0 = np.abs(data.x[data.s == 0] - mu0).max(axis=0)
    dev1 = np.abs(data.x[data.s == 1] - mu1).max(axis=0)
    return AggregatedStats(mu0 - mu1, np.maximum(dev0, dev1), mode)


def _check_dims(n: int, stats: AggregatedStats) -> None:
    if n != stats.num_features:
        raise DimensionMismatch(f"dimension mismatch: model expects {n} features, stats have {stats.num_features}")


def lr_fairness_score(w, stats: AggregatedStats, lipschitz: float = 0.25) -> float:
    """L |<w, delta_x>| + 2 L <|w|, Delta_x>."""
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    _check_dims(len(w), stats)
    return float(lipschitz * abs(w @ stats.delta_x) + 2 * lipschitz * (np.abs(w) @ stats.Delta_x))


@dataclass
class LayerBound:
    spectral_norm: float
    spread_norm: float  # ||Delta_z|| at this layer's output
    bound: float  # bound on ||delta_h|| after this layer


def dnn_fairness_breakdown(model: Model, stats: AggregatedStats) -> list[LayerBound]:
    """Layer-by-layer bound on the output disparity of an MLP.

    The group-mean gap propagates through each layer's spectral norm, and the
    spread term starts as |W0| Delta_x and is rescaled by L |W| afterwards.
    """
    if model.kind != "mlp":
        raise ValueError("expected an MLP")
    _check_dims(model.input_dim, stats)
    lip = model.lipschitz
    gap = float(np.linalg.norm(stats.delta_x))
    spread = np.abs(model.layers[0]) @ stats.Delta_x
    out = []
    for ell, w in enumerate(model.layers):
        if ell > 0:
            spread = lip * (np.abs(w) @ spread)
        norm = spectral_norm_real(w)
        spread_norm = float(np.linalg.norm(spread))
        gap = lip * norm * gap + 2 * lip * spread_norm
        out.append(LayerBound(norm, spread_norm, gap))
    return out


def dnn_fairness_score(model: Model, stats: AggregatedStats) -> float:
    return dnn_fairness_breakdown(model, stats)[-1].bound


def fairness_score(model: Model, stats: AggregatedStats) -> float:
    if model.kind == "lr":
        return lr_fairness_score(model.weights, stats, model.lipschitz)
    return dnn_fairness_score(model, stats)


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def _activate(z, activation: str):
    return _sigmoid(z) if activation == "sigmoid" else np.maximum(z, 0.0)


def model_infer(model: Model, x) -> np.ndarray:
    """Forward pass; rows of ``x`` are samples. Returns the scalar outputs."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.input_dim:
        raise DimensionMismatch(f"dimension mismatch: model expects {model.input_dim} features")
    if model.kind == "lr":
        return _activate(x @ model.weights, model.activation)
    h = x.T
    for w in model.layers:
        h = _activate(w @ h, model.activation)
    return h.reshape(-1)


def predict(model: Model, x, threshold: float = 0.5) -> np.ndarray:
    return (model_infer(model, x) >= threshold).astype(np.int64)


def group_metrics(yhat, s, y=None) -> tuple[float, float | None]:
    """(statistical parity gap, equal opportunity gap or None without labels)."""
    yhat = np.asarray(yhat, dtype=np.float64).reshape(-1)
    s = np.asarray(s).reshape(-1)
    if not (s == 0).any() or not (s == 1).any():
        raise EmptyGroupError("both sensitive groups must be nonempty")
    sp = abs(yhat[s == 0].mean() - yhat[s == 1].mean())
    eo = None
    if y is not None:
        y = np.asarray(y).reshape(-1)
        pos0, pos1 = (s == 0) & (y == 1), (s == 1) & (y == 1)
        if not pos0.any() or not pos1.any():
            raise EmptyGroupError("equal opportunity is undefined: a group has no positive labels")
        eo = abs(yhat[pos0].mean() - yhat[pos1].mean())
    return float(sp), None if eo is None else float(eo)
