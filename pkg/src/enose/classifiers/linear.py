"""Multinomial logistic regression trained by full-batch gradient descent."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidHyperparameter
from ..net import softmax
from ..validation import as_feature_matrix, class_index_targets
from .base import ProbabilisticClassifier


class LogisticRegression(ProbabilisticClassifier):
    """Softmax regression with L2 weight decay (bias left unpenalized).

    Weights start at zero, so training is deterministic regardless of
    seed; the seed parameter exists for interface uniformity.
    """

    def __init__(self, *, learning_rate=0.1, iterations=500, l2=1e-4, seed=0):
        self.learning_rate = learning_rate
        self.iterations = iterations
        self.l2 = l2
        self.seed = seed

    def fit(self, X, y):
        if self.learning_rate <= 0 or self.iterations < 1 or self.l2 < 0:
            raise InvalidHyperparameter(
                "logistic regression needs learning_rate > 0, iterations >= 1, l2 >= 0"
            )
        X = as_feature_matrix(X)
        self.classes_, idx = class_index_targets(y)
        n, d = X.shape
        c = len(self.classes_)
        onehot = np.zeros((n, c))
        onehot[np.arange(n), idx] = 1.0

        weights = np.zeros((d, c))
        bias = np.zeros(c)
        for _ in range(self.iterations):
            probabilities = softmax(X @ weights + bias)
            residual = probabilities - onehot
            grad_w = X.T @ residual / n + self.l2 * weights
            grad_b = residual.mean(axis=0)
            weights -= self.learning_rate * grad_w
            bias -= self.learning_rate * grad_b
        self.coef_ = weights
        self.intercept_ = bias
        self.n_features_in_ = d
        return self

    def predict_proba(self, X):
        X = self._validated(X)
        return softmax(X @ self.coef_ + self.intercept_)
