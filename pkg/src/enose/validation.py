"""Input validation helpers shared by estimators."""

from __future__ import annotations

import numpy as np
from sklearn.exceptions import NotFittedError

from .errors import DimensionMismatch, SingleClassData


def as_feature_matrix(X, *, n_features: int | None = None) -> np.ndarray:
    """Coerce to a 2-D float64 matrix of finite values.

    A single vector is promoted to one row. Width is checked against
    ``n_features`` when given.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got ndim={X.ndim}")
    if n_features is not None and X.shape[1] != n_features:
        raise DimensionMismatch(
            f"expected {n_features} features, got {X.shape[1]}"
        )
    if not np.all(np.isfinite(X)):
        raise DimensionMismatch("feature matrix contains non-finite values")
    return X


def as_target_array(y, n_rows: int) -> np.ndarray:
    y = np.asarray(y, dtype=object).ravel()
    if y.shape[0] != n_rows:
        raise DimensionMismatch(
            f"got {n_rows} rows but {y.shape[0]} targets"
        )
    return y


def class_index_targets(y) -> tuple[np.ndarray, np.ndarray]:
    """Map targets onto (classes, integer indices); needs >= 2 classes."""
    y = np.asarray(y, dtype=object).ravel()
    classes = sorted(set(y))
    if len(classes) < 2:
        raise SingleClassData(
            f"training data contains {len(classes)} class(es); need at least 2"
        )
    lookup = {c: i for i, c in enumerate(classes)}
    idx = np.fromiter((lookup[v] for v in y), dtype=np.int64, count=len(y))
    return np.array(classes, dtype=object), idx


def check_is_fitted(estimator, attribute: str) -> None:
    if getattr(estimator, attribute, None) is None:
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit first"
        )
