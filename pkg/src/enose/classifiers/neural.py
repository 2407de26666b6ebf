"""Neural classifiers: the wide MLP, the grid CNN, and the small 16x16 net.

Architectures (class logits always follow the last listed layer):

* ``mlp64``   input d -> dense 64 -> relu -> dropout -> dense 64 -> logits
* ``cnn4x10`` input 40 viewed as a 1x4x10 channel/step grid ->
  conv 4@2x2 (valid, -> 4x3x9) -> relu -> maxpool 1x3 (-> 4x3x3) ->
  conv 16@2x2 (-> 16x2x2) -> relu -> flatten 64 -> dropout ->
  dense 16 -> relu -> logits
* ``fc16x16`` input d -> dense 16 -> relu -> dense 16 -> relu -> logits

Training is mini-batch gradient descent with momentum for 50 epochs by
default; everything is driven by one seeded generator, so a fixed seed
fixes the fitted model bit for bit.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidHyperparameter
from ..net import (
    Conv2d,
    Dense,
    Dropout,
    Flatten,
    MaxPool2d,
    Network,
    Relu,
    Reshape,
    max_relative_gradient_error,
    softmax,
    train_network,
)
from ..validation import as_feature_matrix, class_index_targets
from .base import ProbabilisticClassifier

ARCHITECTURES = ("mlp64", "cnn4x10", "fc16x16")

_GRID_FEATURES = 40


def build_network(architecture: str, n_features: int, n_classes: int, dropout: float) -> Network:
    if architecture == "mlp64":
        return Network(
            [
                Dense(n_features, 64),
                Relu(),
                Dropout(dropout),
                Dense(64, 64),
                Dense(64, n_classes),
            ]
        )
    if architecture == "cnn4x10":
        if n_features != _GRID_FEATURES:
            raise InvalidHyperparameter(
                f"the grid CNN needs {_GRID_FEATURES} features (4 channels x 10 steps), "
                f"got {n_features}"
            )
        return Network(
            [
                Reshape((1, 4, 10)),
                Conv2d(1, 4, (2, 2)),
                Relu(),
                MaxPool2d((1, 3)),
                Conv2d(4, 16, (2, 2)),
                Relu(),
                Flatten(),
                Dropout(dropout),
                Dense(64, 16),
                Relu(),
                Dense(16, n_classes),
            ]
        )
    if architecture == "fc16x16":
        return Network(
            [
                Dense(n_features, 16),
                Relu(),
                Dense(16, 16),
                Relu(),
                Dense(16, n_classes),
            ]
        )
    raise InvalidHyperparameter(
        f"unknown architecture {architecture!r}; expected one of {ARCHITECTURES}"
    )


class NeuralNetClassifier(ProbabilisticClassifier):
    """Seeded feed-forward classifier over one of the preset architectures.

    ``scale_inputs`` centers each column on its training mean and
    divides everything by one global standard deviation. The freshness
    preset needs it because raw resistance values sit orders of
    magnitude above the other channels and uncentered inputs train
    poorly at the default rate. The single shared scale keeps the
    informative high-variance columns dominant instead of equalizing
    them with noise columns the way per-column standardization would.
    """

    def __init__(
        self,
        architecture: str = "mlp64",
        *,
        epochs: int = 50,
        batch_size: int = 32,
        learning_rate: float = 1e-3,
        momentum: float = 0.9,
        dropout: float = 0.5,
        scale_inputs: bool = False,
        seed: int = 0,
    ):
        self.architecture = architecture
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.dropout = dropout
        self.scale_inputs = scale_inputs
        self.seed = seed

    def fit(self, X, y):
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise InvalidHyperparameter(
                "neural training needs epochs >= 1, batch_size >= 1, learning_rate > 0"
            )
        X = as_feature_matrix(X)
        self.classes_, target_idx = class_index_targets(y)
        if self.scale_inputs:
            self.input_center_ = X.mean(axis=0)
            centered = X - self.input_center_
            self.input_spread_ = float(centered.std()) or 1.0
            X = centered / self.input_spread_
        else:
            self.input_center_ = None
            self.input_spread_ = None
        rng = np.random.default_rng(self.seed)
        network = build_network(self.architecture, X.shape[1], len(self.classes_), self.dropout)
        network.init_params(rng)
        train_network(
            network,
            X,
            target_idx,
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            rng=rng,
        )
        self.network_ = network
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        X = self._validated(X)
        if self.input_center_ is not None:
            X = (X - self.input_center_) / self.input_spread_
        return softmax(self.network_.logits(X))


def mlp_table_preset(seed: int = 0) -> NeuralNetClassifier:
    """The wide two-layer MLP used for stage comparisons."""
    return NeuralNetClassifier("mlp64", seed=seed)


def cnn_grid_preset(seed: int = 0) -> NeuralNetClassifier:
    """The channel/step grid CNN; consumes raw 40-wide rows."""
    return NeuralNetClassifier("cnn4x10", seed=seed)


def freshness_net(seed: int = 0) -> NeuralNetClassifier:
    """The compact 16x16 net that scores the four freshness levels.

    Branch corpora are tiny (tens of rows), so 50 epochs give only about
    a hundred gradient steps; the raised learning rate is what lets the
    net actually fit them in that budget.
    """
    return NeuralNetClassifier(
        "fc16x16", dropout=0.0, scale_inputs=True, learning_rate=0.02, seed=seed
    )


def gradient_check(
    architecture: str,
    *,
    n_features: int = _GRID_FEATURES,
    n_classes: int = 4,
    seed: int = 0,
    sample: tuple | None = None,
    step: float = 1e-5,
) -> float:
    """Max relative backprop error against central finite differences.

    Builds the architecture with seeded random weights and compares
    every parameter's gradient on one sample, drawn from the seed when
    ``sample`` (vector, target index) is not supplied. Dropout is
    inactive because the check runs in inference mode.
    """
    rng = np.random.default_rng(seed)
    network = build_network(architecture, n_features, n_classes, dropout=0.5)
    network.init_params(rng)
    if sample is None:
        x = rng.normal(size=(1, n_features))
        target = np.array([int(rng.integers(n_classes))])
    else:
        vector, target_index = sample
        x = np.asarray(vector, dtype=np.float64).reshape(1, -1)
        target = np.array([int(target_index)])
    return max_relative_gradient_error(network, x, target, step=step)
