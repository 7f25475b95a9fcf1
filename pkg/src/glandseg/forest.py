"""Random forest with Gini-split decision trees, plus a brute-force KNN
baseline.

Determinism contract: every bit of randomness for tree ``t`` of a forest
trained with seed ``s`` comes from a generator seeded with
``mix_seed(s, t)`` (a splitmix64-style avalanche, below). Trees therefore
never share state and serial and thread-parallel training build identical
models.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .imaging import Label

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

#: Number of label slots in count vectors (Label enum size).
N_LABELS = 3

#: Gains at or below this floor are treated as no improvement so float
#: noise cannot manufacture a split.
_GAIN_EPS = 1e-12


def mix_seed(seed: int, index: int) -> int:
    """splitmix64 avalanche of ``seed + (index + 1) * golden_gamma``.

    Fixed and documented so models reproduce across runs and machines.
    """
    z = (int(seed) + (int(index) + 1) * _GOLDEN) & _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


@dataclass(frozen=True)
class TrainParams:
    trees: int = 100
    features_per_split: int | None = None  # None -> ceil(sqrt(n_features))
    min_samples_split: int = 2
    max_depth: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.trees < 1:
            raise ValueError(f"trees must be >= 1, got {self.trees}")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError("features_per_split must be >= 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")


@dataclass
class DecisionTree:
    """Flat-array tree. ``feature[i] == -1`` marks node i as a leaf.

    ``counts`` holds the class histogram of the training samples that
    reached each node (kept for every node in memory; only leaves are
    serialized). Children always have larger indices than their parent.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        leaf = self.feature < 0
        self._leaf_class = np.where(leaf, np.argmax(self.counts, axis=1), -1)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of ``x``."""
        cur = np.zeros(len(x), dtype=np.int64)
        while True:
            feat = self.feature[cur]
            active = feat >= 0
            if not active.any():
                return cur
            rows = np.nonzero(active)[0]
            go_left = x[rows, feat[rows]] <= self.threshold[cur[rows]]
            cur[rows] = np.where(go_left, self.left[cur[rows]], self.right[cur[rows]])

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Majority class of the reached leaf (count ties break low)."""
        return self._leaf_class[self.apply(x)]

    def to_nodes(self) -> list[dict]:
        nodes = []
        for i in range(self.n_nodes):
            if self.feature[i] < 0:
                nodes.append({"counts": [int(c) for c in self.counts[i]]})
            else:
                nodes.append(
                    {
                        "feature": int(self.feature[i]),
                        "threshold": float(self.threshold[i]),
                        "left": int(self.left[i]),
                        "right": int(self.right[i]),
                    }
                )
        return nodes

    @classmethod
    def from_nodes(cls, nodes: list[dict]) -> "DecisionTree":
        n = len(nodes)
        feature = np.full(n, -1, dtype=np.int64)
        threshold = np.zeros(n, dtype=np.float64)
        left = np.full(n, -1, dtype=np.int64)
        right = np.full(n, -1, dtype=np.int64)
        counts = np.zeros((n, N_LABELS), dtype=np.int64)
        for i, node in enumerate(nodes):
            if "counts" in node:
                counts[i] = node["counts"]
            else:
                feature[i] = node["feature"]
                threshold[i] = node["threshold"]
                left[i] = node["left"]
                right[i] = node["right"]
        return cls(feature, threshold, left, right, counts)


def _best_split(x, y_onehot, idx, rng, k, parent_counts, parent_gini):
    """Best (feature, threshold) by Gini gain over a random feature subset.

    Thresholds are the midpoints of consecutive distinct sorted values;
    equal gains keep the first candidate encountered.
    """
    n = len(idx)
    feats = rng.choice(x.shape[1], size=k, replace=False)
    sub = y_onehot[idx]
    best_gain = _GAIN_EPS
    best = None
    for f in feats:
        v = x[idx, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        boundary = np.nonzero(vs[1:] != vs[:-1])[0]
        if boundary.size == 0:
            continue
        cum = np.cumsum(sub[order], axis=0)
        nl = (boundary + 1).astype(np.float64)
        nr = n - nl
        cl = cum[boundary]
        cr = parent_counts[None, :] - cl
        gini_l = 1.0 - ((cl / nl[:, None]) ** 2).sum(axis=1)
        gini_r = 1.0 - ((cr / nr[:, None]) ** 2).sum(axis=1)
        gain = parent_gini - (nl * gini_l + nr * gini_r) / n
        j = int(np.argmax(gain))
        if gain[j] > best_gain:
            best_gain = float(gain[j])
            best = (int(f), float((vs[boundary[j]] + vs[boundary[j] + 1]) / 2.0))
    return best


def _grow_tree(x, y, rng, params: TrainParams, k: int) -> DecisionTree:
    y_onehot = y[:, None] == np.arange(N_LABELS)[None, :]
    feature, threshold, left, right, counts = [], [], [], [], []
    # Stack holds (sample indices, depth, parent node, is-left-child);
    # right is pushed first so nodes come out in pre-order.
    stack = [(np.arange(len(y)), 0, -1, False)]
    while stack:
        idx, depth, parent, is_left = stack.pop()
        node = len(feature)
        if parent >= 0:
            (left if is_left else right)[parent] = node
        c = np.bincount(y[idx], minlength=N_LABELS)
        counts.append(c)
        stop = (
            len(idx) < params.min_samples_split
            or c.max() == len(idx)
            or (params.max_depth is not None and depth >= params.max_depth)
        )
        split = None
        if not stop:
            parent_gini = 1.0 - ((c / len(idx)) ** 2).sum()
            split = _best_split(x, y_onehot, idx, rng, k, c, parent_gini)
        if split is not None:
            f, thr = split
            go_left = x[idx, f] <= thr
            # Midpoints of adjacent representable floats can round onto an
            # endpoint; refuse the split rather than emit an empty child.
            if go_left.all() or not go_left.any():
                split = None
        if split is None:
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            continue
        feature.append(f)
        threshold.append(thr)
        left.append(-1)
        right.append(-1)
        stack.append((idx[~go_left], depth + 1, node, False))
        stack.append((idx[go_left], depth + 1, node, True))
    return DecisionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(counts, dtype=np.int64),
    )


@dataclass
class RandomForest:
    trees: list[DecisionTree]
    feature_dim: int
    classes: np.ndarray
    params: TrainParams

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.feature_dim:
            raise ValueError(
                f"dimension mismatch: expected {self.feature_dim} features, got shape {x.shape}"
            )
        return x

    def tree_votes(self, x: np.ndarray) -> np.ndarray:
        """(n_samples, n_trees) per-tree predicted labels."""
        x = self._check(x)
        return np.column_stack([t.predict(x) for t in self.trees])

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Modal tree vote; ties break by GLAND < MIX < NONGLAND."""
        votes = self.tree_votes(x)
        tallies = (votes[:, :, None] == np.arange(N_LABELS)).sum(axis=1)
        return np.argmax(tallies, axis=1)

    def resolve_binary(self, x: np.ndarray) -> np.ndarray:
        """Gland/NonGland call from non-MIX tree votes; ties -> NONGLAND.

        Used when a MIX prediction cannot descend to a deeper level.
        """
        votes = self.tree_votes(x)
        gland = (votes == Label.GLAND).sum(axis=1)
        nongland = (votes == Label.NONGLAND).sum(axis=1)
        return np.where(gland > nongland, int(Label.GLAND), int(Label.NONGLAND))

    def to_dict(self) -> dict:
        return {
            "kind": "forest",
            "feature_dim": int(self.feature_dim),
            "classes": [int(c) for c in self.classes],
            "trees": [{"nodes": t.to_nodes()} for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict, params: TrainParams) -> "RandomForest":
        trees = [DecisionTree.from_nodes(t["nodes"]) for t in d["trees"]]
        return cls(trees, int(d["feature_dim"]), np.array(d["classes"], dtype=np.int64), params)


def train_forest(x: np.ndarray, y: np.ndarray, params: TrainParams, n_jobs: int = 1) -> RandomForest:
    """Bag ``params.trees`` Gini trees over bootstrap resamples of (x, y)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or len(x) == 0:
        raise ValueError("empty training set")
    if len(y) != len(x):
        raise ValueError(f"dimension mismatch: {len(x)} samples vs {len(y)} labels")
    if y.min() < 0 or y.max() >= N_LABELS:
        raise ValueError("labels must be Label values")
    n, d = x.shape
    k = params.features_per_split if params.features_per_split is not None else math.isqrt(d - 1) + 1
    k = min(k, d)

    def build(t: int) -> DecisionTree:
        rng = np.random.default_rng(mix_seed(params.seed, t))
        boot = rng.integers(0, n, size=n)
        return _grow_tree(x[boot], y[boot], rng, params, k)

    if n_jobs == 1:
        trees = [build(t) for t in range(params.trees)]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(build, range(params.trees)))
    return RandomForest(trees, d, np.unique(y), params)


def knn_predict(train_x: np.ndarray, train_y: np.ndarray, queries: np.ndarray, k: int) -> np.ndarray:
    """Euclidean k-nearest-neighbor majority labels.

    ``k`` clamps to the training-set size. Distance ties prefer the lower
    training index; label-count ties resolve to the tied label whose
    neighbor appears nearest.
    """
    train_x = np.asarray(train_x, dtype=np.float64)
    train_y = np.asarray(train_y, dtype=np.int64)
    queries = np.asarray(queries, dtype=np.float64)
    if queries.ndim == 1:
        queries = queries[None, :]
    if train_x.ndim != 2 or len(train_x) == 0:
        raise ValueError("empty training set")
    if len(train_y) != len(train_x):
        raise ValueError("dimension mismatch between training vectors and labels")
    if queries.shape[1] != train_x.shape[1]:
        raise ValueError(
            f"dimension mismatch: queries have {queries.shape[1]} features, train has {train_x.shape[1]}"
        )
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    kk = min(k, len(train_x))
    order = _nearest(train_x, queries, kk)
    out = np.empty(len(queries), dtype=np.int64)
    for r in range(len(queries)):
        neigh = train_y[order[r]]
        tallies = np.bincount(neigh, minlength=N_LABELS)
        top = tallies.max()
        tied = np.nonzero(tallies == top)[0]
        if len(tied) == 1:
            out[r] = tied[0]
        else:
            out[r] = next(int(lbl) for lbl in neigh if tallies[lbl] == top)
    return out


def _nearest(train_x: np.ndarray, queries: np.ndarray, k: int, chunk: int = 128) -> np.ndarray:
    """Indices of the k smallest distances per query, ties by low index."""
    t2 = (train_x * train_x).sum(axis=1)
    out = np.empty((len(queries), k), dtype=np.int64)
    for start in range(0, len(queries), chunk):
        q = queries[start : start + chunk]
        d2 = (q * q).sum(axis=1)[:, None] + t2[None, :] - 2.0 * (q @ train_x.T)
        out[start : start + len(q)] = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return out


@dataclass
class KnnClassifier:
    """Per-level KNN drop-in for the forest (classifier = "knn")."""

    train_x: np.ndarray
    train_y: np.ndarray
    k: int
    feature_dim: int = field(init=False)
    classes: np.ndarray = field(init=False)

    def __post_init__(self):
        self.train_x = np.asarray(self.train_x, dtype=np.float64)
        self.train_y = np.asarray(self.train_y, dtype=np.int64)
        if self.train_x.ndim != 2 or len(self.train_x) == 0:
            raise ValueError("empty training set")
        if len(self.train_y) != len(self.train_x):
            raise ValueError("dimension mismatch between training vectors and labels")
        self.feature_dim = self.train_x.shape[1]
        self.classes = np.unique(self.train_y)

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.feature_dim:
            raise ValueError(
                f"dimension mismatch: expected {self.feature_dim} features, got shape {x.shape}"
            )
        return knn_predict(self.train_x, self.train_y, x, self.k)

    def resolve_binary(self, x: np.ndarray) -> np.ndarray:
        """Gland/NonGland majority among non-MIX neighbors; ties -> NONGLAND."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        kk = min(self.k, len(self.train_x))
        order = _nearest(self.train_x, x, kk)
        out = np.empty(len(x), dtype=np.int64)
        for r in range(len(x)):
            neigh = self.train_y[order[r]]
            gland = int((neigh == Label.GLAND).sum())
            nongland = int((neigh == Label.NONGLAND).sum())
            out[r] = int(Label.GLAND) if gland > nongland else int(Label.NONGLAND)
        return out

    def to_dict(self) -> dict:
        return {
            "kind": "knn",
            "feature_dim": int(self.feature_dim),
            "classes": [int(c) for c in self.classes],
            "k": int(self.k),
            "train_x": [[float(v) for v in row] for row in self.train_x],
            "train_y": [int(v) for v in self.train_y],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KnnClassifier":
        return cls(np.array(d["train_x"], dtype=np.float64), np.array(d["train_y"]), int(d["k"]))
