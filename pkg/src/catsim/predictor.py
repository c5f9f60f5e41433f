"""Regression for data-rate and TX-power prediction.

Two learners are provided: ordinary least squares and an M5-style model
tree (axis-parallel splits chosen by standard-deviation reduction, a linear
model in every leaf). Losses, k-fold cross-validation and a JSON model
format complete the module.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels

log = logging.getLogger(__name__)

FEATURES = ("rsrp", "rsrq", "sinr", "cqi", "velocity", "payload_size")
TX_FEATURES = ("rsrp", "rsrq", "sinr", "velocity", "payload_size")
# CSV column for each feature
FEATURE_COLUMNS = {"rsrp": "rsrp", "rsrq": "rsrq", "sinr": "sinr", "cqi": "cqi",
                   "velocity": "v", "payload_size": "payload"}

MODEL_FORMAT = "catsim-regression-model"


class ModelKind(str, enum.Enum):
    LINEAR = "LINEAR"
    MODEL_TREE = "MODEL_TREE"


class RankDeficiencyWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FeatureVector:
    rsrp: float
    rsrq: float
    sinr: float
    cqi: float
    velocity: float
    payload_size: float

    def __post_init__(self):
        for name in FEATURES:
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"feature {name} must be finite")
        if self.payload_size < 0:
            raise ValueError("payload_size must be non-negative")

    @classmethod
    def from_context(cls, ctx, payload_size: float) -> "FeatureVector":
        return cls(ctx.rsrp, ctx.rsrq, ctx.sinr, float(ctx.cqi), ctx.velocity, float(payload_size))

    def as_array(self, names: Sequence[str] = FEATURES) -> np.ndarray:
        return np.array([getattr(self, n) for n in names], dtype=np.float64)


@dataclass(frozen=True)
class LabeledSample:
    features: FeatureVector
    label: float

    def __post_init__(self):
        if not math.isfinite(self.label):
            raise ValueError("label must be finite")


def samples_to_arrays(samples: Sequence[LabeledSample],
                      names: Sequence[str] = FEATURES) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([s.features.as_array(names) for s in samples], dtype=np.float64).reshape(-1, len(names))
    y = np.array([s.label for s in samples], dtype=np.float64)
    return X, y


@dataclass(eq=False)
class RegressionModel:
    """Flattened binary tree; a linear model is a tree with one leaf.

    Node ``i`` is internal when ``feature[i] >= 0`` and sends a sample left
    when ``x[feature[i]] <= threshold[i]``. Leaves hold the linear model
    (``intercept``, ``coef``); internal rows of those arrays are zero.
    """

    kind: ModelKind
    feature_names: tuple[str, ...]
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    coef: np.ndarray
    intercept: np.ndarray
    target: str = "generic"
    meta: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    @property
    def depth(self) -> int:
        def walk(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))
        return walk(0)

    @cached_property
    def _py(self):
        # plain-Python copies: single-sample prediction runs once per tick in the simulator
        return (self.feature.tolist(), self.threshold.tolist(), self.left.tolist(),
                self.right.tolist(), self.coef.tolist(), self.intercept.tolist())

    def leaf_of(self, x) -> int:
        feature, threshold, left, right = self._py[:4]
        node = 0
        while feature[node] >= 0:
            node = left[node] if x[feature[node]] <= threshold[node] else right[node]
        return node

    def predict_one(self, x: Sequence[float]) -> float:
        """Raw (unclamped) prediction for one ordered feature list."""
        node = self.leaf_of(x)
        c = self._py[4][node]
        return self._py[5][node] + sum(c[j] * x[j] for j in range(len(c)))

    def predict_raw(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64).reshape(-1, len(self.feature_names))
        return _kernels.tree_predict(self.feature, self.threshold, self.left, self.right,
                                     self.coef, self.intercept, X)

    def leaf_models(self) -> list[tuple[float, dict[str, float]]]:
        return [(float(self.intercept[i]), dict(zip(self.feature_names, self.coef[i].tolist())))
                for i in range(self.n_nodes) if self.feature[i] < 0]


def _coerce_row(model: RegressionModel, features) -> list[float]:
    if isinstance(features, FeatureVector):
        return [getattr(features, n) for n in model.feature_names]
    if isinstance(features, Mapping):
        missing = [n for n in model.feature_names if n not in features]
        if missing:
            raise ValueError(f"missing features for model: {', '.join(missing)}")
        return [float(features[n]) for n in model.feature_names]
    row = [float(v) for v in features]
    if len(row) != len(model.feature_names):
        raise ValueError(f"model expects {len(model.feature_names)} features "
                         f"({', '.join(model.feature_names)}), got {len(row)}")
    return row


def predict(model: RegressionModel, features) -> float:
    """Deterministic prediction; data-rate models never return negative rates."""
    value = model.predict_one(_coerce_row(model, features))
    if model.target == "datarate":
        value = max(value, 0.0)
    return value


def predict_many(model: RegressionModel, X) -> np.ndarray:
    out = model.predict_raw(X)
    if model.target == "datarate":
        out = np.maximum(out, 0.0)
    return out


# -- least squares ---------------------------------------------------------

def _independent_columns(X: np.ndarray) -> tuple[list[int], np.ndarray, np.ndarray]:
    """Greedy column selection on the standardized design (intercept implied)."""
    n, d = X.shape
    mean = X.mean(axis=0) if n else np.zeros(d)
    std = X.std(axis=0) if n else np.zeros(d)
    kept: list[int] = []
    Z = np.zeros((n, 0))
    for j in range(d):
        if std[j] <= 1e-12 * max(1.0, abs(mean[j])):
            continue
        cand = np.column_stack([Z, (X[:, j] - mean[j]) / std[j]])
        sv = np.linalg.svd(cand, compute_uv=False)
        if sv[-1] > 1e-8 * math.sqrt(n):
            kept.append(j)
            Z = cand
    return kept, mean, std


def _fit_linear(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float, list[int]]:
    """OLS with intercept; returns (coef over all columns, intercept, dropped columns)."""
    n, d = X.shape
    kept, mean, std = _independent_columns(X)
    coef = np.zeros(d)
    ym = float(np.mean(y))
    if kept:
        Z = (X[:, kept] - mean[kept]) / std[kept]
        gamma, *_ = np.linalg.lstsq(Z, y - ym, rcond=None)
        coef[kept] = gamma / std[kept]
    intercept = ym - float(coef @ mean) if n else 0.0
    dropped = [j for j in range(d) if j not in kept]
    return coef, intercept, dropped


def _single_leaf(kind, names, coef, intercept, target, meta=None) -> RegressionModel:
    return RegressionModel(
        kind=kind, feature_names=tuple(names),
        feature=np.array([-1], dtype=np.intp), threshold=np.array([np.nan]),
        left=np.array([-1], dtype=np.intp), right=np.array([-1], dtype=np.intp),
        coef=np.asarray(coef, dtype=np.float64).reshape(1, -1),
        intercept=np.array([intercept], dtype=np.float64), target=target, meta=meta or {})


def _as_xy(data, names):
    if isinstance(data, tuple) and len(data) == 2:
        X, y = data
        X = np.asarray(X, dtype=np.float64).reshape(len(y), -1)
        return X, np.asarray(y, dtype=np.float64)
    return samples_to_arrays(list(data), names)


def train_linear(data, feature_names: Sequence[str] = FEATURES,
                 target: str = "generic") -> RegressionModel:
    """Least-squares fit of ``label ~ intercept + features``.

    ``data`` is a sequence of :class:`LabeledSample` or an ``(X, y)`` pair.
    Features that are constant or collinear with earlier ones are dropped
    (coefficient 0) and reported with a :class:`RankDeficiencyWarning`.
    """
    X, y = _as_xy(data, feature_names)
    d = X.shape[1]
    if len(feature_names) != d:
        raise ValueError("feature_names does not match the design width")
    if len(y) < d + 1:
        raise ValueError(f"need at least {d + 1} samples for {d} features, got {len(y)}")
    coef, intercept, dropped = _fit_linear(X, y)
    if dropped:
        names = ", ".join(feature_names[j] for j in dropped)
        warnings.warn(f"rank-deficient design, dropped features: {names}",
                      RankDeficiencyWarning, stacklevel=2)
    return _single_leaf(ModelKind.LINEAR, feature_names, coef, intercept, target,
                        {"dropped": [feature_names[j] for j in dropped]})


# -- model tree ------------------------------------------------------------

def best_split(X: np.ndarray, y: np.ndarray, min_leaf: int) -> tuple[int, float, float]:
    """``(feature, threshold, sdr)`` of the best split, feature -1 if none helps."""
    f, thr, sdr = _kernels.best_split(np.asarray(X, dtype=np.float64),
                                      np.asarray(y, dtype=np.float64), int(min_leaf))
    return int(f), float(thr), float(sdr)


def train_model_tree(data, min_leaf: int = 10, max_depth: int = 8,
                     feature_names: Sequence[str] = FEATURES, target: str = "generic",
                     min_sd_ratio: float = 0.05) -> RegressionModel:
    """Grow an unpruned M5-style model tree.

    A node becomes a leaf at ``max_depth``, below ``2 * min_leaf`` samples,
    once its label spread falls under ``min_sd_ratio`` of the root's, or when
    no split reduces the standard deviation.
    """
    X, y = _as_xy(data, feature_names)
    if min_leaf < 1 or max_depth < 0:
        raise ValueError("min_leaf must be >= 1 and max_depth >= 0")
    if len(y) < 2 * min_leaf:
        raise ValueError(f"need at least {2 * min_leaf} samples, got {len(y)}")
    d = X.shape[1]
    sd_root = float(np.std(y))

    feature, threshold, left, right, coefs, intercepts = [], [], [], [], [], []

    def grow(idx: np.ndarray, depth: int) -> int:
        node = len(feature)
        Xn, yn = X[idx], y[idx]
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        coefs.append(np.zeros(d))
        intercepts.append(0.0)

        split = None
        if (depth < max_depth and len(idx) >= 2 * min_leaf and sd_root > 0
                and np.std(yn) > min_sd_ratio * sd_root):
            f, thr, _ = best_split(Xn, yn, min_leaf)
            if f >= 0:
                split = (f, thr)
        if split is None:
            coefs[node], intercepts[node], _ = _fit_linear(Xn, yn)
            return node
        f, thr = split
        go_left = Xn[:, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node] = grow(idx[go_left], depth + 1)
        right[node] = grow(idx[~go_left], depth + 1)
        return node

    grow(np.arange(len(y)), 0)
    return RegressionModel(
        kind=ModelKind.MODEL_TREE, feature_names=tuple(feature_names),
        feature=np.array(feature, dtype=np.intp), threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.intp), right=np.array(right, dtype=np.intp),
        coef=np.array(coefs, dtype=np.float64).reshape(-1, d),
        intercept=np.array(intercepts, dtype=np.float64), target=target,
        meta={"min_leaf": min_leaf, "max_depth": max_depth, "min_sd_ratio": min_sd_ratio})


# -- evaluation ------------------------------------------------------------

def _pair(predictions, labels):
    p = np.asarray(predictions, dtype=np.float64).ravel()
    s = np.asarray(labels, dtype=np.float64).ravel()
    if len(p) != len(s):
        raise ValueError(f"length mismatch: {len(p)} predictions vs {len(s)} labels")
    if len(p) == 0:
        raise ValueError("empty sequences")
    return p, s


def mae(predictions, labels) -> float:
    p, s = _pair(predictions, labels)
    return float(np.mean(np.abs(s - p)))


def rmse(predictions, labels) -> float:
    p, s = _pair(predictions, labels)
    return float(np.sqrt(np.mean((s - p) ** 2)))


def pearson(predictions, labels) -> tuple[float, bool]:
    """Correlation and whether it is defined (0.0 with ``False`` otherwise)."""
    p, s = _pair(predictions, labels)
    if len(p) < 2 or np.std(p) == 0 or np.std(s) == 0:
        return 0.0, False
    return float(np.corrcoef(p, s)[0, 1]), True


class FoldMetrics(NamedTuple):
    fold: int
    n_test: int
    mae: float
    rmse: float
    correlation: float
    correlation_defined: bool


@dataclass
class CrossValidationResult:
    k: int
    seed: int
    folds: list[FoldMetrics]
    fold_of: np.ndarray  # fold index per sample
    predictions: np.ndarray  # pooled out-of-fold predictions
    mae: float
    rmse: float
    correlation: float
    correlation_defined: bool

    def report(self) -> dict:
        return {
            "k": self.k, "seed": self.seed, "n": int(len(self.fold_of)),
            "pooled": {"mae": self.mae, "rmse": self.rmse, "correlation": self.correlation,
                       "correlation_defined": self.correlation_defined},
            "folds": [f._asdict() for f in self.folds],
        }


Learner = Callable[..., RegressionModel]


def cross_validate(data, k: int = 10, learner: Optional[Learner] = None, seed: int = 0,
                   feature_names: Sequence[str] = FEATURES,
                   target: str = "generic") -> CrossValidationResult:
    """Seeded k-fold cross-validation with pooled out-of-fold metrics.

    ``learner((X, y), feature_names=..., target=...)`` returns a model;
    defaults to :func:`train_model_tree`.
    """
    X, y = _as_xy(data, feature_names)
    n = len(y)
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n:
        raise ValueError(f"k={k} folds exceed the {n} available samples")
    learner = learner or train_model_tree
    order = np.random.default_rng(seed).permutation(n)
    fold_of = np.empty(n, dtype=np.intp)
    for f, chunk in enumerate(np.array_split(order, k)):
        fold_of[chunk] = f

    pooled = np.empty(n)
    folds = []
    for f in range(k):
        test = fold_of == f
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankDeficiencyWarning)
            model = learner((X[~test], y[~test]), feature_names=feature_names, target=target)
        pred = predict_many(model, X[test])
        pooled[test] = pred
        corr, ok = pearson(pred, y[test]) if test.sum() > 1 else (0.0, False)
        folds.append(FoldMetrics(f, int(test.sum()), mae(pred, y[test]), rmse(pred, y[test]), corr, ok))
        log.debug("fold %d: mae=%.4f rmse=%.4f", f, folds[-1].mae, folds[-1].rmse)
    corr, ok = pearson(pooled, y)
    return CrossValidationResult(k, seed, folds, fold_of, pooled, mae(pooled, y), rmse(pooled, y), corr, ok)


def mean_learner(data, feature_names: Sequence[str] = FEATURES, target: str = "generic"):
    """Baseline that predicts the training mean."""
    X, y = _as_xy(data, feature_names)
    return _single_leaf(ModelKind.LINEAR, feature_names, np.zeros(X.shape[1]), float(np.mean(y)), target)


# -- persistence -----------------------------------------------------------

def model_to_dict(model: RegressionModel) -> dict:
    nodes = []
    for i in range(model.n_nodes):
        if model.feature[i] >= 0:
            nodes.append({"id": i, "feature": model.feature_names[model.feature[i]],
                          "threshold": float(model.threshold[i]),
                          "left": int(model.left[i]), "right": int(model.right[i])})
        else:
            nodes.append({"id": i, "leaf": {
                "intercept": float(model.intercept[i]),
                "coef": {n: float(c) for n, c in zip(model.feature_names, model.coef[i])}}})
    return {"format": MODEL_FORMAT, "version": 1, "kind": model.kind.value, "target": model.target,
            "feature_names": list(model.feature_names), "meta": model.meta, "nodes": nodes}


def model_from_dict(doc: dict) -> RegressionModel:
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError("not a catsim model document")
    names = tuple(doc["feature_names"])
    pos = {n: j for j, n in enumerate(names)}
    nodes = sorted(doc["nodes"], key=lambda nd: nd["id"])
    if [nd["id"] for nd in nodes] != list(range(len(nodes))):
        raise ValueError("node ids must be 0..n-1")
    m, d = len(nodes), len(names)
    feature = np.full(m, -1, dtype=np.intp)
    threshold = np.full(m, np.nan)
    left = np.full(m, -1, dtype=np.intp)
    right = np.full(m, -1, dtype=np.intp)
    coef = np.zeros((m, d))
    intercept = np.zeros(m)
    for nd in nodes:
        i = nd["id"]
        if "leaf" in nd:
            intercept[i] = nd["leaf"]["intercept"]
            for name, c in nd["leaf"]["coef"].items():
                coef[i, pos[name]] = c
        else:
            feature[i] = pos[nd["feature"]]
            threshold[i] = nd["threshold"]
            left[i], right[i] = nd["left"], nd["right"]
    return RegressionModel(ModelKind(doc["kind"]), names, feature, threshold, left, right,
                           coef, intercept, doc.get("target", "generic"), doc.get("meta", {}))


def save_model(model: RegressionModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path) -> RegressionModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


class LabeledDataError(ValueError):
    pass


def read_labeled_csv(path, label: str = "datarate",
                     feature_names: Sequence[str] = FEATURES) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix and labels from a CSV with the feature columns and ``label``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise LabeledDataError(f"{path}: empty file") from None
        header = ["v" if h == "velocity" else h for h in header]
        need = [FEATURE_COLUMNS[n] for n in feature_names] + [label]
        missing = [c for c in need if c not in header]
        if missing:
            raise LabeledDataError(f"{path}: missing columns: {', '.join(missing)}")
        idx = [header.index(c) for c in need]
        rows = []
        for rowno, row in enumerate(reader, start=1):
            if not row:
                continue
            vals = []
            for c, i in zip(need, idx):
                try:
                    v = float(row[i])
                except (ValueError, IndexError):
                    cell = row[i] if i < len(row) else ""
                    raise LabeledDataError(f"{path}: row {rowno}, column {c!r}: bad value {cell!r}") from None
                if not math.isfinite(v):
                    raise LabeledDataError(f"{path}: row {rowno}, column {c!r}: non-finite value")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise LabeledDataError(f"{path}: no data rows")
    arr = np.array(rows)
    return arr[:, :-1], arr[:, -1]
