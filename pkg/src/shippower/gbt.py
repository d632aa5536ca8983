"""Gradient-boosted regression trees with squared-error loss.

Each boosting round fits one tree to the current residuals using exact
greedy splitting: every feature is scanned in index order and candidate
thresholds are the midpoints between consecutive sorted distinct values.
Leaf weights carry L1 (soft-threshold) and L2 (shrinkage) regularization:

    w = -soft_threshold(G, alpha) / (H + lambda)

where G sums the gradients (prediction - target) in the leaf and H counts
its rows. Split gain is

    1/2 * [ T(G_L)^2/(H_L+lambda) + T(G_R)^2/(H_R+lambda) - T(G)^2/(H+lambda) ]

with T the same soft-threshold; non-positive gains are rejected. Ties in
gain break toward the lowest feature index, then the lowest threshold, so
training is fully deterministic. Rows are pre-sorted into a canonical
value order before any accumulation, which makes the fitted model (and its
serialization) invariant to the order training rows arrive in.

The split scan itself is compiled with numba; the semantics above are
coded explicitly rather than delegated, so results are bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigError, DomainError

__all__ = [
    "GbtConfig",
    "RegressionTree",
    "GbtModel",
    "gbt_train",
    "gbt_predict",
    "staged_train_mse",
    "gbt_to_dict",
    "gbt_from_dict",
]


@dataclass(frozen=True)
class GbtConfig:
    learning_rate: float = 0.1
    max_depth: int = 6
    n_estimators: int = 100
    l1_alpha: float = 0.0
    l2_lambda: float = 0.0
    min_samples_leaf: int = 1
    base_score: float | None = None  # None: use the training-target mean

    def __post_init__(self):
        if not (0.0 < self.learning_rate <= 1.0):
            raise ConfigError(f"learning_rate must lie in (0, 1], got {self.learning_rate}")
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.n_estimators < 0:
            raise ConfigError(f"n_estimators must be >= 0, got {self.n_estimators}")
        if self.l1_alpha < 0.0:
            raise ConfigError(f"l1_alpha must be >= 0, got {self.l1_alpha}")
        if self.l2_lambda < 0.0:
            raise ConfigError(f"l2_lambda must be >= 0, got {self.l2_lambda}")
        if self.min_samples_leaf < 1:
            raise ConfigError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "max_depth": self.max_depth,
            "n_estimators": self.n_estimators,
            "l1_alpha": self.l1_alpha,
            "l2_lambda": self.l2_lambda,
            "min_samples_leaf": self.min_samples_leaf,
            "base_score": self.base_score,
        }


@dataclass
class RegressionTree:
    """Flat node arrays. ``feature[i] < 0`` marks node i as a leaf whose
    weight is ``value[i]``; internal nodes route x[feature] <= threshold
    to ``left``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, x_matrix: np.ndarray) -> np.ndarray:
        return _tree_predict(
            self.feature, self.threshold, self.left, self.right, self.value,
            np.ascontiguousarray(x_matrix, dtype=np.float64),
        )

    def depth(self) -> int:
        depths = np.zeros(self.feature.size, dtype=int)
        out = 0
        for i in range(self.feature.size):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
            else:
                out = max(out, depths[i])
        return out


@dataclass
class GbtModel:
    config: GbtConfig
    base_score: float
    trees: list[RegressionTree]
    n_features: int
    mode: str = "pure"  # "pure" or "residual": what the targets meant

    def predict(self, x_matrix: np.ndarray) -> np.ndarray:
        return gbt_predict(self, x_matrix)


def _leaf_weight(g_sum: float, h_sum: float, alpha: float, lam: float) -> float:
    """Regularized leaf weight; exposed for the shrinkage properties."""
    return -_soft_threshold(g_sum, alpha) / (h_sum + lam)


def _soft_threshold(g: float, alpha: float) -> float:
    if g > alpha:
        return g - alpha
    if g < -alpha:
        return g + alpha
    return 0.0


@njit(cache=True)
def _nb_soft_threshold(g, alpha):
    if g > alpha:
        return g - alpha
    if g < -alpha:
        return g + alpha
    return 0.0


@njit(cache=True)
def _nb_score(g, h, alpha, lam):
    t = _nb_soft_threshold(g, alpha)
    return t * t / (h + lam)


@njit(cache=True)
def _build_tree(x, grad, sorted_idx, max_depth, min_samples_leaf, alpha, lam):
    """Grow one tree on pre-sorted feature index lists.

    ``sorted_idx`` is a (d, n) working copy: row indices sorted per feature,
    partitioned in place as nodes split so each node owns a contiguous
    [start, end) segment in every feature's list.

    Returns flat node arrays, the node count, and each training row's leaf
    weight (avoids a re-traversal when updating boosting predictions).
    """
    n, d = x.shape
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    value = np.zeros(cap, dtype=np.float64)

    row_values = np.zeros(n, dtype=np.float64)
    goes_left = np.empty(n, dtype=np.bool_)
    scratch = np.empty(n, dtype=np.int64)

    # stack of (node_id, depth, start, end)
    stack = np.empty((cap, 4), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = 0
    stack[0, 3] = n
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack[top, 0]
        depth = stack[top, 1]
        start = stack[top, 2]
        end = stack[top, 3]
        n_node = end - start

        g_total = 0.0
        for i in range(start, end):
            g_total += grad[sorted_idx[0, i]]
        h_total = float(n_node)

        best_gain = 0.0
        best_feature = -1
        best_threshold = 0.0
        best_nl = 0
        parent_score = _nb_score(g_total, h_total, alpha, lam)

        if depth < max_depth and n_node >= 2 * min_samples_leaf:
            for f in range(d):
                g_left = 0.0
                for i in range(start, end - 1):
                    row = sorted_idx[f, i]
                    g_left += grad[row]
                    xv = x[row, f]
                    xv_next = x[sorted_idx[f, i + 1], f]
                    if xv == xv_next:
                        continue
                    nl = i - start + 1
                    nr = n_node - nl
                    if nl < min_samples_leaf or nr < min_samples_leaf:
                        continue
                    gain = 0.5 * (
                        _nb_score(g_left, float(nl), alpha, lam)
                        + _nb_score(g_total - g_left, float(nr), alpha, lam)
                        - parent_score
                    )
                    if gain > best_gain:
                        best_gain = gain
                        best_feature = f
                        best_threshold = 0.5 * (xv + xv_next)
                        best_nl = nl

        if best_feature < 0:
            w = -_nb_soft_threshold(g_total, alpha) / (h_total + lam)
            value[node] = w
            for i in range(start, end):
                row_values[sorted_idx[0, i]] = w
            continue

        for i in range(start, end):
            row = sorted_idx[0, i]
            goes_left[row] = x[row, best_feature] <= best_threshold

        # stable two-pass partition of every feature's segment
        for f in range(d):
            nl = 0
            nr = 0
            for i in range(start, end):
                row = sorted_idx[f, i]
                if goes_left[row]:
                    scratch[nl] = row
                    nl += 1
                else:
                    scratch[best_nl + nr] = row
                    nr += 1
            for i in range(n_node):
                sorted_idx[f, start + i] = scratch[i]

        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        feature[node] = best_feature
        threshold[node] = best_threshold
        left[node] = left_id
        right[node] = right_id

        stack[top, 0] = left_id
        stack[top, 1] = depth + 1
        stack[top, 2] = start
        stack[top, 3] = start + best_nl
        top += 1
        stack[top, 0] = right_id
        stack[top, 1] = depth + 1
        stack[top, 2] = start + best_nl
        stack[top, 3] = end
        top += 1

    return (
        feature[:n_nodes],
        threshold[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        value[:n_nodes],
        row_values,
    )


@njit(cache=True)
def _tree_predict(feature, threshold, left, right, value, x):
    n = x.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if x[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


def _as_arrays(train) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(train, tuple) and len(train) == 2:
        x, y = train
        return np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    x = np.array([fv.as_array() for fv, _ in train], dtype=float)
    y = np.array([t for _, t in train], dtype=float)
    if x.size == 0:
        x = x.reshape(0, 0)
    return x, y


def _canonical_order(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Sort rows by feature values (then target), so accumulation order does
    not depend on how the caller ordered the rows."""
    keys = [y] + [x[:, f] for f in range(x.shape[1] - 1, -1, -1)]
    return np.lexsort(tuple(keys))


def gbt_train(train, config: GbtConfig, seed: int = 0, mode: str = "pure") -> GbtModel:
    """Boost ``config.n_estimators`` trees on the training pairs.

    ``train`` is either a list of (FeatureVector, target) pairs or an
    (X, y) array tuple; targets are expected already standardized by the
    caller. The ``seed`` is accepted for interface uniformity; exact greedy
    training uses no randomness.
    """
    del seed
    x, y = _as_arrays(train)
    if x.shape[0] == 0:
        raise DomainError("cannot train on an empty training set")
    if x.ndim != 2:
        raise DomainError(f"feature matrix must be 2-D, got shape {x.shape}")
    if mode not in ("pure", "residual"):
        raise ConfigError(f"mode must be 'pure' or 'residual', got {mode!r}")

    order = _canonical_order(x, y)
    xc = np.ascontiguousarray(x[order])
    yc = np.ascontiguousarray(y[order])
    n, d = xc.shape

    base = config.base_score if config.base_score is not None else float(np.mean(yc))

    sorted_idx = np.empty((d, n), dtype=np.int64)
    for f in range(d):
        sorted_idx[f] = np.argsort(xc[:, f], kind="stable")

    pred = np.full(n, base, dtype=float)
    trees: list[RegressionTree] = []
    for _ in range(config.n_estimators):
        grad = pred - yc
        work = sorted_idx.copy()
        feat, thr, lft, rgt, val, row_values = _build_tree(
            xc,
            grad,
            work,
            config.max_depth,
            config.min_samples_leaf,
            config.l1_alpha,
            config.l2_lambda,
        )
        trees.append(
            RegressionTree(
                feature=feat.copy(),
                threshold=thr.copy(),
                left=lft.copy(),
                right=rgt.copy(),
                value=val.copy(),
            )
        )
        pred = pred + config.learning_rate * row_values

    return GbtModel(config=config, base_score=base, trees=trees, n_features=d, mode=mode)


def gbt_predict(m: GbtModel, x_matrix) -> np.ndarray:
    """base_score + learning_rate * sum of leaf weights, per row."""
    x = np.asarray(x_matrix, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != m.n_features:
        raise DomainError(
            f"feature dimension mismatch: model expects {m.n_features}, got {x.shape[1]}"
        )
    out = np.full(x.shape[0], m.base_score, dtype=float)
    for tree in m.trees:
        out = out + m.config.learning_rate * tree.predict(x)
    return out[0] if single else out


def staged_train_mse(m: GbtModel, x_matrix, y) -> np.ndarray:
    """Training MSE after 0, 1, ..., n_estimators rounds (for diagnostics)."""
    x = np.asarray(x_matrix, dtype=float)
    y = np.asarray(y, dtype=float)
    pred = np.full(x.shape[0], m.base_score, dtype=float)
    mses = [float(np.mean((pred - y) ** 2))]
    for tree in m.trees:
        pred = pred + m.config.learning_rate * tree.predict(x)
        mses.append(float(np.mean((pred - y) ** 2)))
    return np.array(mses)


def gbt_to_dict(m: GbtModel) -> dict:
    return {
        "config": m.config.to_dict(),
        "base_score": m.base_score,
        "n_features": m.n_features,
        "mode": m.mode,
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "value": t.value.tolist(),
            }
            for t in m.trees
        ],
    }


def gbt_from_dict(doc: dict) -> GbtModel:
    trees = [
        RegressionTree(
            feature=np.asarray(t["feature"], dtype=np.int32),
            threshold=np.asarray(t["threshold"], dtype=np.float64),
            left=np.asarray(t["left"], dtype=np.int32),
            right=np.asarray(t["right"], dtype=np.int32),
            value=np.asarray(t["value"], dtype=np.float64),
        )
        for t in doc["trees"]
    ]
    return GbtModel(
        config=GbtConfig(**doc["config"]),
        base_score=float(doc["base_score"]),
        trees=trees,
        n_features=int(doc["n_features"]),
        mode=doc["mode"],
    )


def gbt_to_json(m: GbtModel) -> str:
    return json.dumps(gbt_to_dict(m), indent=2) + "\n"
