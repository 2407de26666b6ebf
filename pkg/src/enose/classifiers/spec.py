"""Algorithm specs: declarative classifier choice plus preprocessing mode.

A spec names one of the seven algorithm families, whether it consumes
projected or raw predictors, and any hyperparameter overrides. Specs
are what the CLI, the stage assignments and the evaluation harness pass
around; :func:`build_classifier` turns one into a fresh estimator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import clone

from ..errors import InvalidHyperparameter, SingleClassData
from ..preprocess import ProjectionPipeline
from ..validation import as_feature_matrix
from .base import ProbabilisticClassifier
from .ensemble import AdaBoost, RandomForest
from .linear import LogisticRegression
from .neural import NeuralNetClassifier
from .svm import SvmClassifier
from .tree import DecisionTree

ALGORITHMS = ("logreg", "mlp", "cnn", "tree", "forest", "adaboost", "svm")
PROJECTION = "projection"
RAW = "raw"

_PROJECTION_PARAMS = ("pca_components", "normalize")


def default_preprocessing(algorithm: str) -> str:
    # the grid CNN needs the raw channel/step layout; projection would destroy it
    return RAW if algorithm == "cnn" else PROJECTION


@dataclass(frozen=True)
class AlgorithmSpec:
    """One classifier choice: family, preprocessing, hyperparameters."""

    algorithm: str
    preprocessing: str | None = None
    params: tuple[tuple[str, object], ...] = field(default=())

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise InvalidHyperparameter(
                f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}"
            )
        preprocessing = self.preprocessing or default_preprocessing(self.algorithm)
        if preprocessing not in (PROJECTION, RAW):
            raise InvalidHyperparameter(
                f"preprocessing must be {PROJECTION!r} or {RAW!r}, got {preprocessing!r}"
            )
        if self.algorithm == "cnn" and preprocessing == PROJECTION:
            raise InvalidHyperparameter("the grid CNN only accepts raw predictors")
        object.__setattr__(self, "preprocessing", preprocessing)
        if isinstance(self.params, dict):
            object.__setattr__(self, "params", tuple(sorted(self.params.items())))

    @classmethod
    def of(cls, algorithm: str, preprocessing: str | None = None, **params) -> "AlgorithmSpec":
        return cls(algorithm, preprocessing, tuple(sorted(params.items())))

    @property
    def token(self) -> str:
        """Canonical short form, e.g. ``mlp`` or ``mlp:raw``."""
        if self.preprocessing == default_preprocessing(self.algorithm):
            return self.algorithm
        return f"{self.algorithm}:{self.preprocessing}"

    def param_dict(self) -> dict:
        return dict(self.params)


def parse_spec_token(token: str) -> AlgorithmSpec:
    """Parse ``alg`` or ``alg:preprocessing`` as written on the CLI."""
    algorithm, _, preprocessing = token.strip().partition(":")
    return AlgorithmSpec(algorithm, preprocessing or None)


class ProjectedClassifier(ProbabilisticClassifier):
    """Wrap any classifier behind a projection fitted on its training rows.

    The projection refits on every call to fit, so cross-validation
    cannot leak held-out rows into the reduction.
    """

    def __init__(self, estimator=None, *, pca_components: float | int = 0.95,
                 normalize: str = "vector"):
        self.estimator = estimator
        self.pca_components = pca_components
        self.normalize = normalize

    def fit(self, X, y):
        if self.estimator is None:
            raise InvalidHyperparameter("ProjectedClassifier needs an inner estimator")
        X = as_feature_matrix(X)
        self.projection_ = ProjectionPipeline(
            pca_components=self.pca_components, normalize=self.normalize
        ).fit(X, y)
        reduced = self.projection_.transform(X)
        self.estimator_ = clone(self.estimator).fit(reduced, y)
        self.classes_ = self.estimator_.classes_
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        X = self._validated(X)
        return self.estimator_.predict_proba(self.projection_.transform(X))


def _make_inner(spec: AlgorithmSpec, seed: int, params: dict):
    try:
        if spec.algorithm == "logreg":
            return LogisticRegression(seed=seed, **params)
        if spec.algorithm == "mlp":
            return NeuralNetClassifier("mlp64", seed=seed, **params)
        if spec.algorithm == "cnn":
            return NeuralNetClassifier("cnn4x10", seed=seed, **params)
        if spec.algorithm == "tree":
            return DecisionTree(seed=seed, **params)
        if spec.algorithm == "forest":
            return RandomForest(seed=seed, **params)
        if spec.algorithm == "adaboost":
            return AdaBoost(seed=seed, **params)
        if spec.algorithm == "svm":
            return SvmClassifier(seed=seed, **params)
    except TypeError as exc:
        raise InvalidHyperparameter(f"bad parameters for {spec.algorithm}: {exc}") from exc
    raise InvalidHyperparameter(f"unknown algorithm {spec.algorithm!r}")


def build_classifier(spec: AlgorithmSpec, seed: int = 0):
    """Fresh unfitted estimator for ``spec`` with the given training seed."""
    params = spec.param_dict()
    projection_params = {k: params.pop(k) for k in _PROJECTION_PARAMS if k in params}
    inner = _make_inner(spec, seed, params)
    if spec.preprocessing == PROJECTION:
        return ProjectedClassifier(inner, **projection_params)
    return inner


def train_classifier(spec: AlgorithmSpec, X, y, seed: int = 0):
    """Build and fit in one step; deterministic given (spec, data, seed)."""
    y = np.asarray(y, dtype=object).ravel()
    if len(set(y)) < 2:
        raise SingleClassData("training targets contain a single class")
    return build_classifier(spec, seed).fit(X, y)
