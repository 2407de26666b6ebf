"""Tree ensembles: bootstrap forest and boosted decision stumps."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..errors import InvalidHyperparameter
from ..seeding import derive_seed
from ..validation import as_feature_matrix, class_index_targets
from .base import ProbabilisticClassifier
from .tree import DecisionTree


class RandomForest(ProbabilisticClassifier):
    """Bagged Gini trees with per-split feature subsampling.

    Per-tree seeds derive from the master seed, so fitting the trees in
    parallel cannot change the model.
    """

    def __init__(self, *, n_trees=100, max_features="sqrt", bootstrap=True, seed=0, jobs=1):
        self.n_trees = n_trees
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.seed = seed
        self.jobs = jobs

    def _features_per_split(self, d: int) -> int:
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(d)))
        if isinstance(self.max_features, (int, np.integer)):
            if not 1 <= self.max_features <= d:
                raise InvalidHyperparameter(f"max_features must be in 1..{d}")
            return int(self.max_features)
        raise InvalidHyperparameter(f"unsupported max_features {self.max_features!r}")

    def fit(self, X, y):
        if self.n_trees < 1:
            raise InvalidHyperparameter("n_trees must be at least 1")
        X = as_feature_matrix(X)
        self.classes_, _ = class_index_targets(y)
        y = np.asarray(y, dtype=object).ravel()
        n, d = X.shape
        m = self._features_per_split(d)

        def fit_one(index: int) -> DecisionTree:
            tree_seed = derive_seed(self.seed, "tree", index)
            rng = np.random.default_rng(tree_seed)
            rows = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            tree = DecisionTree(max_features=m, seed=derive_seed(tree_seed, "splits"))
            return tree.fit(X[rows], y[rows], classes=self.classes_)

        if self.jobs and self.jobs > 1:
            with ThreadPoolExecutor(max_workers=self.jobs) as pool:
                self.trees_ = list(pool.map(fit_one, range(self.n_trees)))
        else:
            self.trees_ = [fit_one(i) for i in range(self.n_trees)]
        self.n_features_in_ = d
        return self

    def predict_proba(self, X):
        X = self._validated(X)
        total = np.zeros((X.shape[0], len(self.classes_)))
        for tree in self.trees_:
            total += tree.predict_proba(X)
        return total / len(self.trees_)


class AdaBoost(ProbabilisticClassifier):
    """Multi-class boosting of depth-1 stumps (SAMME reweighting).

    Probabilities are the normalized weighted vote shares, which keeps
    them on the simplex without pretending to be calibrated.
    """

    def __init__(self, *, n_rounds=50, seed=0):
        self.n_rounds = n_rounds
        self.seed = seed

    def fit(self, X, y):
        if self.n_rounds < 1:
            raise InvalidHyperparameter("n_rounds must be at least 1")
        X = as_feature_matrix(X)
        self.classes_, target_idx = class_index_targets(y)
        y = np.asarray(y, dtype=object).ravel()
        n = X.shape[0]
        k = len(self.classes_)
        weights = np.full(n, 1.0 / n)
        self.stumps_: list[DecisionTree] = []
        self.alphas_: list[float] = []
        for round_index in range(self.n_rounds):
            stump = DecisionTree(max_depth=1, seed=derive_seed(self.seed, "stump", round_index))
            stump.fit(X, y, sample_weight=weights, classes=self.classes_)
            miss = stump.predict(X) != y
            error = float(weights[miss].sum())
            if error <= 0.0:
                # perfect stump: dominate the vote and stop boosting
                self.stumps_.append(stump)
                self.alphas_.append(np.log((1.0 - 1e-10) / 1e-10) + np.log(k - 1.0))
                break
            if error >= 1.0 - 1.0 / k:
                break  # no better than chance; further rounds cannot help
            alpha = np.log((1.0 - error) / error) + np.log(k - 1.0)
            self.stumps_.append(stump)
            self.alphas_.append(float(alpha))
            weights = weights * np.exp(alpha * miss)
            weights /= weights.sum()
        self.n_features_in_ = X.shape[1]
        return self

    def _vote_scores(self, X, upto=None):
        scores = np.zeros((X.shape[0], len(self.classes_)))
        index = {c: i for i, c in enumerate(self.classes_)}
        for stump, alpha in list(zip(self.stumps_, self.alphas_))[:upto]:
            predictions = stump.predict(X)
            for row, value in enumerate(predictions):
                scores[row, index[value]] += alpha
        return scores

    def predict_proba(self, X):
        X = self._validated(X)
        scores = self._vote_scores(X)
        totals = scores.sum(axis=1, keepdims=True)
        uniform = np.full_like(scores, 1.0 / scores.shape[1])
        return np.where(totals > 0, scores / np.where(totals > 0, totals, 1.0), uniform)

    def staged_predict(self, X):
        """Predictions after 1, 2, ... rounds; for monitoring training error."""
        X = self._validated(X)
        for t in range(1, len(self.stumps_) + 1):
            scores = self._vote_scores(X, upto=t)
            yield self.classes_[np.argmax(scores, axis=1)]
