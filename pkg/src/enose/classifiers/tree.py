"""CART-style decision tree on Gini impurity, with sample weights.

Splits are exhaustive over midpoints between consecutive distinct
values. Ties in gain resolve to the lowest feature index and lowest
threshold, so fitting is deterministic. An impure node splits even at
zero gain as long as some candidate feature still varies, which is what
lets a tree memorize any consistent training set.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidHyperparameter
from ..validation import as_feature_matrix, as_target_array, class_index_targets
from .base import ProbabilisticClassifier


def _best_split(values, target_idx, weights, n_classes):
    """Best (gain, threshold) for one feature column, or None."""
    order = np.argsort(values, kind="stable")
    sorted_values = values[order]
    boundaries = np.flatnonzero(sorted_values[:-1] < sorted_values[1:])
    if boundaries.size == 0:
        return None
    sorted_weights = weights[order]
    weighted = np.zeros((values.shape[0], n_classes))
    weighted[np.arange(values.shape[0]), target_idx[order]] = sorted_weights
    prefix_counts = np.cumsum(weighted, axis=0)
    prefix_weight = np.cumsum(sorted_weights)

    total_counts = prefix_counts[-1]
    total_weight = prefix_weight[-1]
    left_counts = prefix_counts[boundaries]
    left_weight = prefix_weight[boundaries]
    right_counts = total_counts - left_counts
    right_weight = total_weight - left_weight

    gini_left = 1.0 - np.square(left_counts / left_weight[:, None]).sum(axis=1)
    gini_right = 1.0 - np.square(right_counts / right_weight[:, None]).sum(axis=1)
    gini_parent = 1.0 - np.square(total_counts / total_weight).sum()
    children = (left_weight * gini_left + right_weight * gini_right) / total_weight
    gains = gini_parent - children

    best = int(np.argmax(gains))  # first max: lowest threshold wins ties
    pos = boundaries[best]
    threshold = (sorted_values[pos] + sorted_values[pos + 1]) / 2.0
    return float(gains[best]), float(threshold)


class DecisionTree(ProbabilisticClassifier):
    """Gini decision tree; unlimited depth by default.

    ``max_features`` samples that many candidate features per node (used
    by the forest); ``classes`` pins the probability column order when an
    ensemble fits trees on resampled data that may miss classes.
    """

    def __init__(self, *, max_depth=None, min_samples_split=2, max_features=None, seed=0):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.seed = seed

    def fit(self, X, y, sample_weight=None, classes=None):
        if self.min_samples_split < 2:
            raise InvalidHyperparameter("min_samples_split must be at least 2")
        if self.max_depth is not None and self.max_depth < 0:
            raise InvalidHyperparameter("max_depth must be nonnegative")
        X = as_feature_matrix(X)
        n, d = X.shape
        if classes is None:
            self.classes_, target_idx = class_index_targets(y)
        else:
            self.classes_ = np.array(sorted(classes), dtype=object)
            lookup = {c: i for i, c in enumerate(self.classes_)}
            y = as_target_array(y, n)
            target_idx = np.fromiter((lookup[v] for v in y), dtype=np.int64, count=n)
        if sample_weight is None:
            weights = np.ones(n)
        else:
            weights = np.asarray(sample_weight, dtype=np.float64)
            if weights.shape != (n,) or (weights < 0).any() or weights.sum() <= 0:
                raise InvalidHyperparameter("sample_weight must be nonnegative with positive sum")
        rng = np.random.default_rng(self.seed)
        self.tree_ = self._build(X, target_idx, weights, rng)
        self.n_features_in_ = d
        return self

    def _node_features(self, d, rng):
        if self.max_features is None or self.max_features >= d:
            return np.arange(d)
        picked = rng.choice(d, size=self.max_features, replace=False)
        picked.sort()
        return picked

    def _build(self, X, target_idx, weights, rng):
        n_classes = len(self.classes_)
        d = X.shape[1]
        root: dict = {}
        stack = [(root, np.arange(X.shape[0]), 0)]
        while stack:
            node, rows, depth = stack.pop()
            counts = np.bincount(target_idx[rows], weights=weights[rows], minlength=n_classes)
            node["dist"] = (counts / counts.sum()).tolist()
            pure = np.count_nonzero(counts) <= 1
            depth_ok = self.max_depth is None or depth < self.max_depth
            if pure or not depth_ok or rows.size < self.min_samples_split:
                node["kind"] = "leaf"
                continue
            best = None
            for feature in self._node_features(d, rng):
                found = _best_split(X[rows, feature], target_idx[rows], weights[rows], n_classes)
                if found is None:
                    continue
                gain, threshold = found
                if best is None or gain > best[0]:
                    best = (gain, int(feature), threshold)
            if best is None:
                node["kind"] = "leaf"
                continue
            _, feature, threshold = best
            go_left = X[rows, feature] <= threshold
            node["kind"] = "split"
            node["feature"] = feature
            node["threshold"] = threshold
            node["left"] = {}
            node["right"] = {}
            del node["dist"]
            stack.append((node["right"], rows[~go_left], depth + 1))
            stack.append((node["left"], rows[go_left], depth + 1))
        return root

    def predict_proba(self, X):
        X = self._validated(X)
        out = np.empty((X.shape[0], len(self.classes_)))
        for i, row in enumerate(X):
            node = self.tree_
            while node["kind"] == "split":
                node = node["left"] if row[node["feature"]] <= node["threshold"] else node["right"]
            out[i] = node["dist"]
        return out
