"""Per-cycle feature extraction and the tabular dataset container.

Every scan cycle flattens to 40 predictors in channel-major order:
temperature steps 0..9, then pressure, humidity and resistance. Index
``10 * channel + step`` is a bijection onto 0..39, and
:func:`reshape_to_grid` is its inverse (a 4 x 10 grid, one row per
channel).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyCorpus
from .session import MeasurementSession, ScanCycle
from .taxonomy import FreshnessLevel, GeneralClass, SpecificLabel

CHANNELS = ("temperature", "pressure", "humidity", "resistance")
N_CHANNELS = len(CHANNELS)
N_STEPS = 10
N_FEATURES = N_CHANNELS * N_STEPS


def feature_index(channel: int, step: int) -> int:
    """Position of (channel, step) in the flattened predictor vector."""
    if not 0 <= channel < N_CHANNELS or not 0 <= step < N_STEPS:
        raise DimensionMismatch(f"no such channel/step pair: ({channel}, {step})")
    return N_STEPS * channel + step


def extract_features(cycle: ScanCycle) -> np.ndarray:
    """Flatten one cycle into its 40-predictor vector (channel-major)."""
    out = np.empty(N_FEATURES, dtype=np.float64)
    for s, step in enumerate(cycle.steps):
        out[feature_index(0, s)] = step.temperature_c
        out[feature_index(1, s)] = step.pressure_hpa
        out[feature_index(2, s)] = step.humidity_pct
        out[feature_index(3, s)] = step.resistance_ohm
    return out


def reshape_to_grid(vector: np.ndarray) -> np.ndarray:
    """View the 40-vector as the 4 x 10 channel/step grid."""
    vector = np.asarray(vector, dtype=np.float64)
    if vector.shape != (N_FEATURES,):
        raise DimensionMismatch(
            f"expected a vector of length {N_FEATURES}, got shape {vector.shape}"
        )
    return vector.reshape(N_CHANNELS, N_STEPS)


def flatten_grid(grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float64)
    if grid.shape != (N_CHANNELS, N_STEPS):
        raise DimensionMismatch(
            f"expected a {N_CHANNELS} x {N_STEPS} grid, got shape {grid.shape}"
        )
    return grid.reshape(N_FEATURES)


@dataclass(frozen=True)
class Dataset:
    """Row-per-cycle table: features plus the three targets and provenance.

    Arrays are read-only; derive new views with :meth:`subset`.
    """

    features: np.ndarray        # (n, 40) float64
    class_targets: np.ndarray   # (n,) object, GeneralClass
    label_targets: np.ndarray   # (n,) object, SpecificLabel
    freshness_targets: np.ndarray  # (n,) object, FreshnessLevel
    session_ids: np.ndarray     # (n,) object, str

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    def session_order(self) -> list[str]:
        """Distinct session ids in order of first appearance."""
        seen: dict[str, None] = {}
        for sid in self.session_ids:
            seen.setdefault(sid, None)
        return list(seen)

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices)
        return Dataset(
            features=_frozen(self.features[indices]),
            class_targets=_frozen(self.class_targets[indices]),
            label_targets=_frozen(self.label_targets[indices]),
            freshness_targets=_frozen(self.freshness_targets[indices]),
            session_ids=_frozen(self.session_ids[indices]),
        )

    def targets(self, which: str) -> np.ndarray:
        """Target column by name: class, label, freshness or joint."""
        if which == "class":
            return self.class_targets
        if which == "label":
            return self.label_targets
        if which == "freshness":
            return self.freshness_targets
        if which == "joint":
            from .hierarchy import encode_joint

            codes = [
                encode_joint(lab, fresh)
                for lab, fresh in zip(self.label_targets, self.freshness_targets)
            ]
            return _frozen(np.array(codes, dtype=object))
        raise KeyError(f"unknown target column {which!r}")


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.flags.writeable = False
    return array


def build_dataset(sessions: list[MeasurementSession]) -> Dataset:
    """One row per cycle, tagged with its session for grouped validation."""
    if not sessions:
        raise EmptyCorpus("cannot build a dataset from zero sessions")
    features = []
    classes: list[GeneralClass] = []
    labels: list[SpecificLabel] = []
    freshness: list[FreshnessLevel] = []
    ids: list[str] = []
    for session in sessions:
        for cycle in session.cycles:
            features.append(extract_features(cycle))
            classes.append(session.annotation.general_class)
            labels.append(session.annotation.label)
            freshness.append(session.annotation.freshness)
            ids.append(session.session_id)
    return Dataset(
        features=_frozen(np.vstack(features)),
        class_targets=_frozen(np.array(classes, dtype=object)),
        label_targets=_frozen(np.array(labels, dtype=object)),
        freshness_targets=_frozen(np.array(freshness, dtype=object)),
        session_ids=_frozen(np.array(ids, dtype=object)),
    )
