"""Shared prediction contract for every classifier in the suite.

Every estimator fits on (X, y), exposes ``classes_`` sorted ascending,
and returns probability rows that are nonnegative and sum to one.
``predict`` is the argmax with ties broken toward the lowest class
index. Fitted models are immutable; prediction never mutates state.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ..validation import as_feature_matrix, check_is_fitted


class ProbabilisticClassifier(BaseEstimator):
    """Mixin implementing predict on top of predict_proba."""

    def predict_proba(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        probabilities = self.predict_proba(X)
        return self.classes_[np.argmax(probabilities, axis=1)]

    def _validated(self, X) -> np.ndarray:
        check_is_fitted(self, "classes_")
        return as_feature_matrix(X, n_features=self.n_features_in_)


class ConstantClassifier(ProbabilisticClassifier):
    """Always predicts one value with probability 1; the degenerate stub."""

    def __init__(self, value=None):
        self.value = value

    def fit(self, X=None, y=None):
        value = self.value
        if value is None and y is not None:
            values = set(np.asarray(y, dtype=object).ravel())
            if len(values) != 1:
                raise ValueError("ConstantClassifier.fit needs a single-valued target")
            value = values.pop()
        self.classes_ = np.array([value], dtype=object)
        self.n_features_in_ = None
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "classes_")
        X = as_feature_matrix(X)
        return np.ones((X.shape[0], 1))
