"""The classifier suite behind a single train/predict contract."""

from .base import ConstantClassifier, ProbabilisticClassifier
from .ensemble import AdaBoost, RandomForest
from .io import load_model, save_model
from .linear import LogisticRegression
from .neural import (
    ARCHITECTURES,
    NeuralNetClassifier,
    build_network,
    cnn_grid_preset,
    freshness_net,
    gradient_check,
    mlp_table_preset,
)
from .spec import (
    ALGORITHMS,
    AlgorithmSpec,
    ProjectedClassifier,
    build_classifier,
    parse_spec_token,
    train_classifier,
)
from .svm import SvmClassifier
from .tree import DecisionTree

__all__ = [
    "ALGORITHMS",
    "ARCHITECTURES",
    "AdaBoost",
    "AlgorithmSpec",
    "ConstantClassifier",
    "DecisionTree",
    "LogisticRegression",
    "NeuralNetClassifier",
    "ProbabilisticClassifier",
    "ProjectedClassifier",
    "RandomForest",
    "SvmClassifier",
    "build_classifier",
    "build_network",
    "cnn_grid_preset",
    "freshness_net",
    "gradient_check",
    "load_model",
    "mlp_table_preset",
    "parse_spec_token",
    "save_model",
    "train_classifier",
]
