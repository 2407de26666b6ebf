"""Support vector machine: deterministic SMO solver, one-vs-rest on top.

The solver is the classic two-multiplier coordinate ascent on the dual,
with the usual working-set heuristics made deterministic (ties resolve
to the lowest index, fallback scans start at index zero). Probabilities
are a softmax over the per-class decision values and are not calibrated.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidHyperparameter
from ..net import softmax
from ..validation import as_feature_matrix, class_index_targets
from .base import ProbabilisticClassifier

_EPS = 1e-8


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        np.square(A).sum(axis=1)[:, None]
        + np.square(B).sum(axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.exp(-gamma * np.clip(sq, 0.0, None))


def linear_kernel(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B.T


class _BinarySmo:
    """Solve one +1/-1 problem given the precomputed kernel matrix."""

    def __init__(self, K: np.ndarray, y: np.ndarray, c: float, tol: float, max_sweeps: int):
        self.K = K
        self.y = y
        self.c = c
        self.tol = tol
        self.max_sweeps = max_sweeps
        n = y.shape[0]
        self.alpha = np.zeros(n)
        self.b = 0.0
        self.errors = -y.astype(np.float64)  # f(x) = 0 everywhere at start

    def solve(self):
        examine_all = True
        num_changed = 0
        sweeps = 0
        while (num_changed > 0 or examine_all) and sweeps < self.max_sweeps:
            num_changed = 0
            if examine_all:
                candidates = range(self.y.shape[0])
            else:
                candidates = np.flatnonzero((self.alpha > 0) & (self.alpha < self.c))
            for i2 in candidates:
                num_changed += self._examine(int(i2))
            if examine_all:
                examine_all = False
            elif num_changed == 0:
                examine_all = True
            sweeps += 1
        return self.alpha, self.b

    def _examine(self, i2: int) -> int:
        y2 = self.y[i2]
        alpha2 = self.alpha[i2]
        e2 = self.errors[i2]
        r2 = e2 * y2
        if not ((r2 < -self.tol and alpha2 < self.c) or (r2 > self.tol and alpha2 > 0)):
            return 0
        non_bound = np.flatnonzero((self.alpha > 0) & (self.alpha < self.c))
        if non_bound.size > 1:
            i1 = int(non_bound[np.argmax(np.abs(self.errors[non_bound] - e2))])
            if self._step(i1, i2):
                return 1
        for i1 in non_bound:
            if self._step(int(i1), i2):
                return 1
        for i1 in range(self.y.shape[0]):
            if self._step(i1, i2):
                return 1
        return 0

    def _step(self, i1: int, i2: int) -> bool:
        if i1 == i2:
            return False
        alpha1, alpha2 = self.alpha[i1], self.alpha[i2]
        y1, y2 = self.y[i1], self.y[i2]
        e1, e2 = self.errors[i1], self.errors[i2]
        s = y1 * y2
        if s < 0:
            low = max(0.0, alpha2 - alpha1)
            high = min(self.c, self.c + alpha2 - alpha1)
        else:
            low = max(0.0, alpha1 + alpha2 - self.c)
            high = min(self.c, alpha1 + alpha2)
        if low >= high:
            return False
        k11 = self.K[i1, i1]
        k12 = self.K[i1, i2]
        k22 = self.K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0:
            a2 = alpha2 + y2 * (e1 - e2) / eta
            a2 = min(max(a2, low), high)
        else:
            # flat direction: pick the better endpoint of the box segment
            f1 = y1 * e1 - alpha1 * k11 - s * alpha2 * k12
            f2 = y2 * e2 - alpha2 * k22 - s * alpha1 * k12
            l1 = alpha1 + s * (alpha2 - low)
            h1 = alpha1 + s * (alpha2 - high)
            low_obj = (
                l1 * f1 + low * f2 + 0.5 * l1 * l1 * k11 + 0.5 * low * low * k22
                + s * low * l1 * k12
            )
            high_obj = (
                h1 * f1 + high * f2 + 0.5 * h1 * h1 * k11 + 0.5 * high * high * k22
                + s * high * h1 * k12
            )
            if low_obj < high_obj - _EPS:
                a2 = low
            elif low_obj > high_obj + _EPS:
                a2 = high
            else:
                return False
        if abs(a2 - alpha2) < _EPS * (a2 + alpha2 + _EPS):
            return False
        a1 = alpha1 + s * (alpha2 - a2)

        delta1 = y1 * (a1 - alpha1)
        delta2 = y2 * (a2 - alpha2)
        b1 = self.b - e1 - delta1 * k11 - delta2 * k12
        b2 = self.b - e2 - delta1 * k12 - delta2 * k22
        if 0 < a1 < self.c:
            new_b = b1
        elif 0 < a2 < self.c:
            new_b = b2
        else:
            new_b = (b1 + b2) / 2.0
        self.errors += delta1 * self.K[i1] + delta2 * self.K[i2] + (new_b - self.b)
        self.alpha[i1] = a1
        self.alpha[i2] = a2
        self.b = new_b
        return True


class SvmClassifier(ProbabilisticClassifier):
    """One-vs-rest SVM; `kernel` is "rbf" (default) or "linear".

    Default ``gamma="scale"`` resolves to 1 / (n_features * var(X)) at
    fit time.
    """

    def __init__(self, *, c=1.0, kernel="rbf", gamma="scale", tol=1e-3, max_sweeps=1000, seed=0):
        self.c = c
        self.kernel = kernel
        self.gamma = gamma
        self.tol = tol
        self.max_sweeps = max_sweeps
        self.seed = seed

    def _resolve_gamma(self, X: np.ndarray) -> float:
        if self.gamma == "scale":
            variance = float(X.var())
            return 1.0 / (X.shape[1] * variance) if variance > 0 else 1.0 / X.shape[1]
        gamma = float(self.gamma)
        if gamma <= 0:
            raise InvalidHyperparameter("gamma must be positive")
        return gamma

    def _kernel_matrix(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        if self.kernel == "rbf":
            return rbf_kernel(A, B, self.gamma_)
        if self.kernel == "linear":
            return linear_kernel(A, B)
        raise InvalidHyperparameter(f"unsupported kernel {self.kernel!r}")

    def fit(self, X, y):
        if self.c <= 0:
            raise InvalidHyperparameter("c must be positive")
        X = as_feature_matrix(X)
        self.classes_, target_idx = class_index_targets(y)
        self.gamma_ = self._resolve_gamma(X) if self.kernel == "rbf" else None
        K = self._kernel_matrix(X, X)
        self.machines_ = []
        for class_index in range(len(self.classes_)):
            signs = np.where(target_idx == class_index, 1.0, -1.0)
            alpha, b = _BinarySmo(K, signs, self.c, self.tol, self.max_sweeps).solve()
            support = np.flatnonzero(alpha > 1e-10)
            self.machines_.append(
                {
                    "support_vectors": X[support].copy(),
                    "coefficients": (alpha[support] * signs[support]).copy(),
                    "bias": float(b),
                }
            )
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X) -> np.ndarray:
        """One column of f(x) = sum_i coef_i K(sv_i, x) + b per class."""
        X = self._validated(X)
        columns = []
        for machine in self.machines_:
            sv = machine["support_vectors"]
            if sv.shape[0] == 0:
                columns.append(np.full(X.shape[0], machine["bias"]))
                continue
            K = self._kernel_matrix(X, sv)
            columns.append(K @ machine["coefficients"] + machine["bias"])
        return np.column_stack(columns)

    def predict_proba(self, X):
        return softmax(self.decision_function(X))
