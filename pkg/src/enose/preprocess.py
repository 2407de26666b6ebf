"""Normalization and the PCA -> LDA reduction fitted per classification stage.

Normalization zero-centers each data point and scales it by its own
value range. PCA reorders variance onto an orthonormal basis and keeps
enough components to regularize the discriminant step; LDA then finds
the directions that maximize between-class over within-class scatter.
All three compose into :class:`ProjectionPipeline`, the transform that
classical classifiers see.
"""

from __future__ import annotations

import csv
import io

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import (
    BetweenScatterZero,
    DegenerateData,
    DimensionMismatch,
    SingularScatter,
)
from .validation import as_feature_matrix, as_target_array, check_is_fitted

_SIGN_EPS = 1e-12


def normalize_vector(v: np.ndarray) -> np.ndarray:
    """Zero-center one vector and divide by its value range.

    out_i = (v_i - mean(v)) / (max(v) - min(v)); a constant vector maps
    to the zero vector so the result stays defined and zero-centered.
    """
    v = np.asarray(v, dtype=np.float64)
    spread = v.max() - v.min()
    if spread == 0.0:
        return np.zeros_like(v)
    return (v - v.mean()) / spread


def normalize_rows(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    means = X.mean(axis=1, keepdims=True)
    spread = X.max(axis=1, keepdims=True) - X.min(axis=1, keepdims=True)
    out = np.where(spread == 0.0, 0.0, (X - means) / np.where(spread == 0.0, 1.0, spread))
    return out


class RangeNormalizer(BaseEstimator, TransformerMixin):
    """Zero-center and range-scale, per vector (default) or per column.

    Per-vector mode treats mean/max/min as statistics of the single data
    point and needs no fitting; per-column mode learns the statistics on
    the training rows.
    """

    def __init__(self, per: str = "vector"):
        self.per = per

    def fit(self, X, y=None):
        X = as_feature_matrix(X)
        if self.per not in ("vector", "column"):
            raise ValueError(f"per must be 'vector' or 'column', got {self.per!r}")
        self.n_features_in_ = X.shape[1]
        if self.per == "column":
            self.column_means_ = X.mean(axis=0)
            self.column_spread_ = X.max(axis=0) - X.min(axis=0)
        else:
            self.column_means_ = None
            self.column_spread_ = None
        self.fitted_ = True
        return self

    def transform(self, X):
        check_is_fitted(self, "fitted_")
        X = as_feature_matrix(X, n_features=self.n_features_in_)
        if self.per == "vector":
            return normalize_rows(X)
        spread = np.where(self.column_spread_ == 0.0, 1.0, self.column_spread_)
        out = (X - self.column_means_) / spread
        out[:, self.column_spread_ == 0.0] = 0.0
        return out


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Make the first non-negligible coordinate of each row positive."""
    out = components.copy()
    for row in out:
        nonzero = np.flatnonzero(np.abs(row) > _SIGN_EPS)
        if nonzero.size and row[nonzero[0]] < 0:
            row *= -1.0
    return out


class PrincipalComponents(BaseEstimator, TransformerMixin):
    """PCA via eigendecomposition of the sample covariance.

    ``n_components`` is either an exact count or a variance fraction in
    (0, 1]; the fraction keeps the smallest component count whose
    cumulative variance ratio reaches it. Component signs follow a fixed
    convention so repeated fits are bit-identical.
    """

    def __init__(self, n_components: int | float = 0.95):
        self.n_components = n_components

    def fit(self, X, y=None):
        X = as_feature_matrix(X)
        n, d = X.shape
        if n < 2:
            raise DegenerateData("PCA needs at least two rows")
        self.mean_ = X.mean(axis=0)
        centered = X - self.mean_
        if not centered.any():
            raise DegenerateData("all rows are identical; covariance is zero")
        cov = centered.T @ centered / (n - 1)
        cov = (cov + cov.T) / 2.0
        eigenvalues, eigenvectors = np.linalg.eigh(cov)
        order = np.argsort(eigenvalues)[::-1]
        eigenvalues = np.clip(eigenvalues[order], 0.0, None)
        components = _fix_signs(eigenvectors[:, order].T)

        self.eigenvalues_ = eigenvalues
        self.components_ = components
        self.n_features_in_ = d
        self.retained_ = self._retained_count(eigenvalues)
        return self

    def _retained_count(self, eigenvalues: np.ndarray) -> int:
        d = eigenvalues.shape[0]
        if isinstance(self.n_components, (int, np.integer)) and not isinstance(
            self.n_components, bool
        ):
            k = int(self.n_components)
            if not 1 <= k <= d:
                raise ValueError(f"component count must be in 1..{d}, got {k}")
            return k
        fraction = float(self.n_components)
        if not 0.0 < fraction <= 1.0:
            raise ValueError(f"variance fraction must be in (0, 1], got {fraction}")
        ratios = np.cumsum(eigenvalues) / eigenvalues.sum()
        return min(int(np.searchsorted(ratios, fraction - 1e-12) + 1), d)

    def explained_variance_ratio(self) -> np.ndarray:
        check_is_fitted(self, "components_")
        return self.eigenvalues_ / self.eigenvalues_.sum()

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = as_feature_matrix(X, n_features=self.n_features_in_)
        return (X - self.mean_) @ self.components_[: self.retained_].T

    def inverse_transform(self, Z):
        check_is_fitted(self, "components_")
        Z = np.asarray(Z, dtype=np.float64)
        if Z.ndim == 1:
            Z = Z.reshape(1, -1)
        if Z.shape[1] != self.retained_:
            raise DimensionMismatch(
                f"expected {self.retained_} reduced dims, got {Z.shape[1]}"
            )
        return Z @ self.components_[: self.retained_] + self.mean_


class LinearDiscriminants(BaseEstimator, TransformerMixin):
    """Fisher discriminant directions via whitening of the within scatter.

    Output dimension is ``min(n_classes - 1, n_features)``. The within
    scatter gets a ridge of ``1e-6 * trace / dim`` whenever its condition
    number exceeds 1e12; if it stays singular the data was not reduced
    enough beforehand and :class:`SingularScatter` is raised.
    """

    _CONDITION_LIMIT = 1e12
    _RIDGE_SCALE = 1e-6

    def fit(self, X, y):
        X = as_feature_matrix(X)
        y = as_target_array(y, X.shape[0])
        n, d = X.shape
        classes = sorted(set(y))
        if len(classes) < 2:
            raise BetweenScatterZero("need at least two classes to discriminate")

        overall = X.mean(axis=0)
        s_within = np.zeros((d, d))
        s_between = np.zeros((d, d))
        class_means = np.empty((len(classes), d))
        for i, c in enumerate(classes):
            rows = X[y == c]
            mu = rows.mean(axis=0)
            class_means[i] = mu
            centered = rows - mu
            s_within += centered.T @ centered
            gap = (mu - overall).reshape(-1, 1)
            s_between += rows.shape[0] * (gap @ gap.T)

        trace_w = float(np.trace(s_within))
        trace_b = float(np.trace(s_between))
        if trace_b <= 1e-12 * max(trace_w, 1e-300):
            raise BetweenScatterZero("class means coincide; nothing to separate")
        if trace_w <= 0.0:
            raise SingularScatter("within-class scatter is zero")

        s_within = (s_within + s_within.T) / 2.0
        w_vals, w_vecs = np.linalg.eigh(s_within)
        if w_vals[-1] <= 0.0 or w_vals[0] <= w_vals[-1] / self._CONDITION_LIMIT:
            ridge = self._RIDGE_SCALE * trace_w / d
            s_within = s_within + ridge * np.eye(d)
            w_vals, w_vecs = np.linalg.eigh(s_within)
            if w_vals[0] <= 0.0 or w_vals[0] <= w_vals[-1] / (self._CONDITION_LIMIT**2):
                raise SingularScatter(
                    "within-class scatter not invertible after ridge; "
                    "reduce dimensionality further before the discriminant step"
                )

        whitener = w_vecs / np.sqrt(w_vals)
        projected_between = whitener.T @ s_between @ whitener
        projected_between = (projected_between + projected_between.T) / 2.0
        b_vals, b_vecs = np.linalg.eigh(projected_between)
        take = min(len(classes) - 1, d)
        top = b_vecs[:, np.argsort(b_vals)[::-1][:take]]
        self.directions_ = _fix_signs((whitener @ top).T)
        self.classes_ = np.array(classes, dtype=object)
        self.projected_means_ = class_means @ self.directions_.T
        self.n_features_in_ = d
        return self

    @property
    def n_components_(self) -> int:
        check_is_fitted(self, "directions_")
        return self.directions_.shape[0]

    def transform(self, X):
        check_is_fitted(self, "directions_")
        X = as_feature_matrix(X, n_features=self.n_features_in_)
        return X @ self.directions_.T


class ProjectionPipeline(BaseEstimator, TransformerMixin):
    """Range normalization, then PCA, then LDA; fitted per stage.

    Fitted pipelines are immutable and safe for concurrent transform
    calls. Output dimension is ``min(fitted_class_count - 1, pca dims)``.
    """

    def __init__(self, pca_components: int | float = 0.95, normalize: str = "vector"):
        self.pca_components = pca_components
        self.normalize = normalize

    def fit(self, X, y):
        X = as_feature_matrix(X)
        y = as_target_array(y, X.shape[0])
        self.normalizer_ = RangeNormalizer(per=self.normalize).fit(X)
        normalized = self.normalizer_.transform(X)
        self.pca_ = PrincipalComponents(self.pca_components).fit(normalized)
        reduced = self.pca_.transform(normalized)
        self.lda_ = LinearDiscriminants().fit(reduced, y)
        self.classes_ = self.lda_.classes_
        self.n_features_in_ = X.shape[1]
        return self

    @property
    def n_components_(self) -> int:
        check_is_fitted(self, "lda_")
        return self.lda_.n_components_

    def transform(self, X):
        check_is_fitted(self, "lda_")
        X = as_feature_matrix(X, n_features=self.n_features_in_)
        return self.lda_.transform(self.pca_.transform(self.normalizer_.transform(X)))


def apply_projection(pipeline: ProjectionPipeline, vector) -> np.ndarray:
    """Project a single 40-predictor vector; deterministic by construction."""
    return pipeline.transform(np.asarray(vector, dtype=np.float64).reshape(1, -1))[0]


def projection_scatter_rows(pipeline: ProjectionPipeline, X, targets) -> list[tuple]:
    """Reduced coordinates plus a class tag, one row per data row."""
    X = np.asarray(X, dtype=np.float64)
    targets = np.asarray(targets, dtype=object).ravel()
    if X.shape[0] == 0:
        return []
    reduced = pipeline.transform(X)
    rows = []
    for coords, target in zip(reduced, targets):
        name = target.value if hasattr(target, "value") else str(target)
        rows.append(tuple(float(c) for c in coords) + (name,))
    return rows


def render_scatter_csv(rows: list[tuple], n_dims: int) -> str:
    """CSV text with header ``dim0,dim1[,dim2...],class``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"dim{i}" for i in range(n_dims)] + ["class"])
    for row in rows:
        writer.writerow([repr(float(v)) for v in row[:-1]] + [row[-1]])
    return buf.getvalue()
