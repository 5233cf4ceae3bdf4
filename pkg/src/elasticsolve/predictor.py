"""Random-forest regression of the energy-optimal core count from instance features.

The forest is implemented directly on numpy: CART regression trees grown
to purity on bootstrap resamples, with a random feature subset per split.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from .runtime_data import DataError, InstanceFeatures
from .tradeoff import TradeoffCurve, min_energy_cores

MODEL_FORMAT = "elasticsolve-forest"
MODEL_VERSION = 1
PREDICTIONS_HEADER = ("instance", "predicted_k", "clamped_k")


@dataclass
class LabeledDataset:
    instances: List[str]
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2 or len(self.X) != len(self.y) or len(self.instances) != len(self.y):
            raise DataError("features, labels and instance ids must align")

    @property
    def feature_width(self) -> int:
        return self.X.shape[1]

    def __len__(self):
        return len(self.y)

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=int)
        return LabeledDataset([self.instances[i] for i in idx], self.X[idx], self.y[idx])


@dataclass
class ForestConfig:
    tree_count: int = 100
    features_per_split: Optional[int] = None  # None -> ceil(width / 3)
    min_leaf: int = 1
    max_depth: Optional[int] = None
    rng_seed: int = 0
    log_target: bool = False


def extract_labels(curves: Sequence[TradeoffCurve]) -> Dict[str, int]:
    """Energy-optimal core count per instance (ties go to the smallest k)."""
    if not curves:
        raise ValueError("no curves")
    return {c.instance: min_energy_cores(c)[0] for c in curves}


def build_dataset(features: Mapping[str, InstanceFeatures], labels: Mapping[str, float]) -> LabeledDataset:
    missing = [i for i in labels if i not in features]
    if missing:
        raise DataError(f"no features for {len(missing)} labelled instance(s), e.g. {missing[0]!r}")
    ids = list(labels)
    widths = {features[i].width for i in ids}
    if len(widths) > 1:
        raise DataError("feature vectors differ in width")
    X = np.array([features[i].values for i in ids], dtype=float).reshape(len(ids), -1)
    return LabeledDataset(ids, X, np.array([labels[i] for i in ids], dtype=float))


# --------------------------------------------------------------------------
# trees

class RegressionTree:
    """Flat-array CART tree; ``feature[i] == -1`` marks a leaf."""

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float)

    @property
    def node_count(self):
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.nonzero(active)[0]
            nd = node[rows]
            go_left = X[rows, self.feature[nd]] <= self.threshold[nd]
            node[rows] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self):
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(), "value": self.value.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["value"])


def _best_split(x: np.ndarray, y: np.ndarray, min_leaf: int):
    """Best threshold on one feature as (sse_reduction_score, threshold) or None.

    The score is ``S_l^2/n_l + S_r^2/n_r``; maximising it minimises the
    children's summed squared error.
    """
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(ys)
    csum = np.cumsum(ys)
    total = csum[-1]
    n_left = np.arange(1, n)
    valid = xs[1:] > xs[:-1]
    valid &= (n_left >= min_leaf) & (n - n_left >= min_leaf)
    if not valid.any():
        return None
    s_left = csum[:-1]
    score = s_left ** 2 / n_left + (total - s_left) ** 2 / (n - n_left)
    score = np.where(valid, score, -np.inf)
    i = int(np.argmax(score))  # first maximum = lowest threshold
    threshold = 0.5 * (xs[i] + xs[i + 1])
    if threshold >= xs[i + 1]:  # midpoint rounded up onto the right value
        threshold = xs[i]
    return float(score[i]), float(threshold)


def grow_tree(X: np.ndarray, y: np.ndarray, features_per_split: int, min_leaf: int,
              rng: np.random.Generator, max_depth: Optional[int] = None) -> RegressionTree:
    n_features = X.shape[1]
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(val):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(val)
        return len(feature) - 1

    root = new_node(float(np.mean(y)))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        ys = y[idx]
        if len(idx) < 2 * min_leaf or np.all(ys == ys[0]) or (max_depth is not None and depth >= max_depth):
            continue
        parent_score = ys.sum() ** 2 / len(ys)
        perm = rng.permutation(n_features)
        best = None
        # like common forest implementations, keep drawing features past the
        # quota until at least one admits a split
        for start in range(0, n_features, features_per_split):
            candidates = np.sort(perm[start:start + features_per_split])
            for f in candidates:
                found = _best_split(X[idx, f], ys, min_leaf)
                if found is None:
                    continue
                score, thr = found
                if best is None or score > best[0] or (score == best[0] and (f, thr) < (best[1], best[2])):
                    best = (score, int(f), thr)
            if best is not None:
                break
        if best is None or best[0] <= parent_score * (1 + 1e-12):
            continue
        _, f, thr = best
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(float(np.mean(y[li])))
        right[node] = new_node(float(np.mean(y[ri])))
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return RegressionTree(feature, threshold, left, right, value)


# --------------------------------------------------------------------------
# forest

@dataclass
class ForestModel:
    trees: List[RegressionTree]
    medians: np.ndarray
    config: ForestConfig
    label_range: tuple = field(default=(math.nan, math.nan))

    @property
    def tree_count(self):
        return len(self.trees)

    @property
    def feature_width(self):
        return len(self.medians)

    def _prepare(self, X) -> np.ndarray:
        X = np.array(X, dtype=float, ndmin=2)
        if X.shape[1] != self.feature_width:
            raise ValueError(f"expected {self.feature_width} features, got {X.shape[1]}")
        return np.where(np.isnan(X), self.medians, X)

    def predict_many(self, X) -> np.ndarray:
        X = self._prepare(X)
        out = np.mean([t.predict(X) for t in self.trees], axis=0)
        if self.config.log_target:
            out = np.exp2(out)
        return np.clip(out, *self.label_range)

    def predict(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise ValueError("predict takes a single feature vector")
        return float(self.predict_many(x[None, :])[0])

    def to_json(self) -> str:
        payload = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "config": asdict(self.config),
            "medians": [None if math.isnan(m) else m for m in self.medians.tolist()],
            "label_range": list(self.label_range),
            "trees": [t.to_dict() for t in self.trees],
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "ForestModel":
        payload = json.loads(text)
        if payload.get("format") != MODEL_FORMAT:
            raise DataError("not a forest model file")
        if payload.get("version") != MODEL_VERSION:
            raise DataError(f"unsupported model version {payload.get('version')}")
        medians = np.array([math.nan if m is None else m for m in payload["medians"]], dtype=float)
        return cls([RegressionTree.from_dict(t) for t in payload["trees"]], medians,
                   ForestConfig(**payload["config"]), tuple(payload["label_range"]))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "ForestModel":
        with open(path) as fh:
            return cls.from_json(fh.read())


def train_forest(ds: LabeledDataset, config: ForestConfig = None) -> ForestModel:
    """Fit ``config.tree_count`` trees, each on a bootstrap resample of size ``len(ds)``.

    Missing values are replaced by training medians, which are stored in
    the model.  Tree ``i`` draws from its own stream spawned off
    ``config.rng_seed``, so results do not depend on training order.
    """
    config = config or ForestConfig()
    if len(ds) == 0:
        raise DataError("cannot train on an empty dataset")
    if ds.feature_width == 0:
        raise DataError("feature width must be at least 1")
    if config.tree_count < 1 or config.min_leaf < 1:
        raise ValueError("tree_count and min_leaf must be positive")
    width = ds.feature_width
    m = config.features_per_split or math.ceil(width / 3)
    m = max(1, min(m, width))

    with np.errstate(all="ignore"):
        medians = np.array([np.median(col[~np.isnan(col)]) if (~np.isnan(col)).any() else 0.0
                            for col in ds.X.T])
    X = np.where(np.isnan(ds.X), medians, ds.X)
    y = np.log2(ds.y) if config.log_target else ds.y
    n = len(y)

    trees = []
    for child in np.random.SeedSequence(config.rng_seed).spawn(config.tree_count):
        rng = np.random.default_rng(child)
        boot = rng.integers(0, n, size=n)
        trees.append(grow_tree(X[boot], y[boot], m, config.min_leaf, rng, config.max_depth))
    return ForestModel(trees, medians, config, (float(ds.y.min()), float(ds.y.max())))


# --------------------------------------------------------------------------
# cross-validation

def strata_of(labels: Sequence[float]) -> np.ndarray:
    """Stratum id per label: the label itself for <= 10 distinct values, else log2 deciles."""
    labels = np.asarray(labels, dtype=float)
    values = np.unique(labels)
    if len(values) <= 10:
        return np.searchsorted(values, labels)
    logs = np.log2(labels)
    edges = np.unique(np.quantile(logs, np.linspace(0.1, 0.9, 9)))
    return np.searchsorted(edges, logs, side="right")


def stratified_kfold(labels: Sequence[float], folds: int = 10, rng_seed: int = 0) -> np.ndarray:
    """Fold index per row.

    Rows are shuffled within each stratum and dealt round-robin, with the
    dealing position carried across strata; fold sizes therefore differ by
    at most one, as do each stratum's per-fold counts.
    """
    n = len(labels)
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if n < folds:
        raise ValueError(f"{n} rows cannot fill {folds} folds")
    strata = strata_of(labels)
    rng = np.random.default_rng(rng_seed)
    assignment = np.empty(n, dtype=int)
    pos = 0
    for s in np.unique(strata):
        members = rng.permutation(np.nonzero(strata == s)[0])
        assignment[members] = (pos + np.arange(len(members))) % folds
        pos = (pos + len(members)) % folds
    return assignment


@dataclass
class CVReport:
    fold_mae: List[float]
    fold_rmse: List[float]
    predictions: Dict[str, float]
    labels: Dict[str, float]

    @property
    def pooled_mae(self) -> float:
        return float(np.mean([abs(self.predictions[i] - self.labels[i]) for i in self.labels]))

    @property
    def pooled_rmse(self) -> float:
        return float(np.sqrt(np.mean([(self.predictions[i] - self.labels[i]) ** 2 for i in self.labels])))

    def to_dict(self):
        return {"fold_mae": self.fold_mae, "fold_rmse": self.fold_rmse,
                "pooled_mae": self.pooled_mae, "pooled_rmse": self.pooled_rmse}


def cross_validate(ds: LabeledDataset, config: ForestConfig = None, folds: int = 10,
                   fold_seed: Optional[int] = None) -> CVReport:
    """Out-of-fold prediction for every instance, trained on the other folds."""
    config = config or ForestConfig()
    assignment = stratified_kfold(ds.y, folds, config.rng_seed if fold_seed is None else fold_seed)
    preds = np.empty(len(ds))
    maes, rmses = [], []
    for f in range(folds):
        test = np.nonzero(assignment == f)[0]
        train = np.nonzero(assignment != f)[0]
        model = train_forest(ds.subset(train), config)
        preds[test] = model.predict_many(ds.X[test])
        err = preds[test] - ds.y[test]
        maes.append(float(np.mean(np.abs(err))))
        rmses.append(float(np.sqrt(np.mean(err ** 2))))
    return CVReport(maes, rmses, dict(zip(ds.instances, preds.tolist())),
                    dict(zip(ds.instances, ds.y.tolist())))


def format_predictions_csv(predictions: Mapping[str, float], grid: Sequence[int]) -> str:
    from .policy import nearest_grid_k

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PREDICTIONS_HEADER)
    for inst, k in predictions.items():
        w.writerow([inst, repr(float(k)), nearest_grid_k(float(k), grid)])
    return buf.getvalue()


def load_predictions_csv(path) -> Dict[str, float]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "instance" not in reader.fieldnames or "predicted_k" not in reader.fieldnames:
            raise DataError(f"{path}: expected columns {','.join(PREDICTIONS_HEADER)}")
        return {row["instance"]: float(row["predicted_k"]) for row in reader}
