"""Versioned model persistence.

A saved model is canonical JSON: header fields plus a typed payload
tree in which numpy arrays travel as base64 raw bytes. Encoding the
same fitted model twice yields identical bytes, which is what the
determinism guarantees of the training stack rest on.
"""

from __future__ import annotations

import base64
import enum
import json

import numpy as np

from .. import net as _net
from ..errors import CorruptModel, VersionMismatch
from ..preprocess import (
    LinearDiscriminants,
    PrincipalComponents,
    ProjectionPipeline,
    RangeNormalizer,
)
from ..taxonomy import FreshnessLevel, GeneralClass, SpecificLabel
from .base import ConstantClassifier
from .ensemble import AdaBoost, RandomForest
from .linear import LogisticRegression
from .neural import NeuralNetClassifier
from .spec import ProjectedClassifier
from .svm import SvmClassifier
from .tree import DecisionTree

FORMAT = "enose-model"
FORMAT_VERSION = 1

# estimator registry: persisted name -> (class, fitted attributes to keep)
_REGISTRY: dict[str, tuple[type, tuple[str, ...]]] = {
    "logreg": (LogisticRegression, ("classes_", "coef_", "intercept_", "n_features_in_")),
    "tree": (DecisionTree, ("classes_", "tree_", "n_features_in_")),
    "forest": (RandomForest, ("classes_", "trees_", "n_features_in_")),
    "adaboost": (AdaBoost, ("classes_", "stumps_", "alphas_", "n_features_in_")),
    "svm": (
        SvmClassifier,
        ("classes_", "machines_", "gamma_", "n_features_in_"),
    ),
    "neural": (
        NeuralNetClassifier,
        ("classes_", "network_", "input_center_", "input_spread_", "n_features_in_"),
    ),
    "projected": (ProjectedClassifier, ("classes_", "projection_", "estimator_", "n_features_in_")),
    "constant": (ConstantClassifier, ("classes_", "n_features_in_")),
    "range-normalizer": (
        RangeNormalizer,
        ("fitted_", "column_means_", "column_spread_", "n_features_in_"),
    ),
    "pca": (
        PrincipalComponents,
        ("mean_", "eigenvalues_", "components_", "retained_", "n_features_in_"),
    ),
    "lda": (
        LinearDiscriminants,
        ("classes_", "directions_", "projected_means_", "n_features_in_"),
    ),
    "projection-pipeline": (
        ProjectionPipeline,
        ("classes_", "normalizer_", "pca_", "lda_", "n_features_in_"),
    ),
}
_NAME_OF_TYPE = {cls: name for name, (cls, _) in _REGISTRY.items()}

_ENUMS = {
    "GeneralClass": GeneralClass,
    "SpecificLabel": SpecificLabel,
    "FreshnessLevel": FreshnessLevel,
}

_LAYER_TYPES = {
    "Dense": _net.Dense,
    "Relu": _net.Relu,
    "Dropout": _net.Dropout,
    "Reshape": _net.Reshape,
    "Flatten": _net.Flatten,
    "Conv2d": _net.Conv2d,
    "MaxPool2d": _net.MaxPool2d,
}
_LAYER_NAMES = {cls: name for name, cls in _LAYER_TYPES.items()}


def _encode(value):
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        if value.dtype == object:
            return {
                "__kind__": "object-array",
                "items": [_encode(v) for v in value.tolist()],
            }
        array = np.ascontiguousarray(value)
        return {
            "__kind__": "ndarray",
            "dtype": str(array.dtype),
            "shape": list(array.shape),
            "data": base64.b64encode(array.tobytes()).decode("ascii"),
        }
    if isinstance(value, enum.Enum):
        return {"__kind__": "enum", "type": type(value).__name__, "name": value.name}
    if isinstance(value, tuple):
        return {"__kind__": "tuple", "items": [_encode(v) for v in value]}
    if isinstance(value, list):
        return {"__kind__": "list", "items": [_encode(v) for v in value]}
    if isinstance(value, dict):
        return {
            "__kind__": "dict",
            "items": [[_encode(k), _encode(v)] for k, v in value.items()],
        }
    if isinstance(value, _net.Network):
        layers = []
        for layer in value.layers:
            layers.append(
                {
                    "type": _LAYER_NAMES[type(layer)],
                    "config": _encode(layer.config()),
                    "params": _encode({k: layer.params[k] for k in sorted(layer.params)}),
                }
            )
        return {"__kind__": "network", "layers": layers}
    if type(value) in _NAME_OF_TYPE:
        name = _NAME_OF_TYPE[type(value)]
        _, attrs = _REGISTRY[name]
        return {
            "__kind__": "estimator",
            "class": name,
            "params": _encode(dict(sorted(value.get_params(deep=False).items()))),
            "attrs": _encode({a: getattr(value, a, None) for a in attrs}),
        }
    raise TypeError(f"cannot serialize value of type {type(value).__name__}")


def _decode(value):
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, list):
        return [_decode(v) for v in value]
    if not isinstance(value, dict):
        raise CorruptModel(f"unexpected node of type {type(value).__name__}")
    kind = value.get("__kind__")
    if kind == "ndarray":
        raw = base64.b64decode(value["data"].encode("ascii"))
        array = np.frombuffer(raw, dtype=np.dtype(value["dtype"]))
        return array.reshape(value["shape"]).copy()
    if kind == "object-array":
        return np.array([_decode(v) for v in value["items"]], dtype=object)
    if kind == "enum":
        return _ENUMS[value["type"]][value["name"]]
    if kind == "tuple":
        return tuple(_decode(v) for v in value["items"])
    if kind == "list":
        return [_decode(v) for v in value["items"]]
    if kind == "dict":
        return {_decode(k): _decode(v) for k, v in value["items"]}
    if kind == "network":
        layers = []
        for spec in value["layers"]:
            layer = _LAYER_TYPES[spec["type"]](**_decode(spec["config"]))
            for name, array in _decode(spec["params"]).items():
                layer.params[name] = array
            layers.append(layer)
        return _net.Network(layers)
    if kind == "estimator":
        cls, attrs = _REGISTRY[value["class"]]
        model = cls(**_decode(value["params"]))
        for attr, attr_value in _decode(value["attrs"]).items():
            setattr(model, attr, attr_value)
        return model
    raise CorruptModel(f"unknown payload kind {kind!r}")


def save_model(model) -> bytes:
    """Serialize a fitted estimator to deterministic bytes."""
    seed = getattr(model, "seed", None)
    algorithm = _NAME_OF_TYPE.get(type(model))
    if algorithm is None:
        raise TypeError(f"{type(model).__name__} is not a persistable estimator")
    document = {
        "format": FORMAT,
        "format_version": FORMAT_VERSION,
        "algorithm": algorithm,
        "seed": seed,
        "classes": _encode(list(getattr(model, "classes_", []))),
        "has_projection": isinstance(model, ProjectedClassifier),
        "payload": _encode(model),
    }
    return json.dumps(document, sort_keys=True, separators=(",", ":")).encode("utf-8")


def load_model(data: bytes):
    """Restore a model saved by :func:`save_model`."""
    try:
        document = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptModel(f"model bytes are not valid JSON: {exc}") from exc
    if not isinstance(document, dict) or document.get("format") != FORMAT:
        raise CorruptModel("not a model file (missing format marker)")
    version = document.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"unsupported model format version {version!r}")
    try:
        return _decode(document["payload"])
    except CorruptModel:
        raise
    except Exception as exc:
        raise CorruptModel(f"model payload failed to decode: {exc}") from exc
