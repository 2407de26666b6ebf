"""Agreement metrics over a confusion matrix.

Conventions: rows are actual classes, columns are predicted. Per-class
precision and recall define 0/0 as 0, macro F-1 averages over every
declared class, and kappa corrects accuracy by the chance agreement
``p_e = sum_i m_i * n_i / n**2`` built from the marginals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, UnknownLabel


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square count matrix over a declared class order."""

    counts: np.ndarray
    classes: tuple

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError(f"counts must be square, got shape {counts.shape}")
        if counts.shape[0] != len(self.classes):
            raise ValueError("class list does not match matrix size")
        if (counts < 0).any():
            raise ValueError("counts must be nonnegative")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "classes", tuple(self.classes))

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def actual_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def predicted_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.classes != other.classes:
            raise ValueError("cannot pool matrices over different class lists")
        return ConfusionMatrix(self.counts + other.counts, self.classes)


def confusion(actual, predicted, classes=None) -> ConfusionMatrix:
    """Count (actual, predicted) pairs over a declared class list.

    Without ``classes`` the list is the sorted union of both inputs.
    """
    actual = list(actual)
    predicted = list(predicted)
    if len(actual) != len(predicted):
        raise LengthMismatch(
            f"actual has {len(actual)} entries, predicted has {len(predicted)}"
        )
    if len(actual) == 0:
        raise LengthMismatch("need at least one (actual, predicted) pair")
    if classes is None:
        classes = sorted(set(actual) | set(predicted))
    classes = tuple(classes)
    index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for a, p in zip(actual, predicted):
        if a not in index:
            raise UnknownLabel(f"actual value {a!r} not in declared classes")
        if p not in index:
            raise UnknownLabel(f"predicted value {p!r} not in declared classes")
        counts[index[a], index[p]] += 1
    return ConfusionMatrix(counts, classes)


def accuracy(cm: ConfusionMatrix) -> float:
    return float(np.trace(cm.counts)) / cm.n


def per_class_precision_recall(cm: ConfusionMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Per-class (precision, recall) arrays with 0/0 defined as 0."""
    true_positive = np.diag(cm.counts).astype(np.float64)
    predicted = cm.predicted_totals.astype(np.float64)
    actual = cm.actual_totals.astype(np.float64)
    precision = np.divide(
        true_positive, predicted, out=np.zeros_like(true_positive), where=predicted > 0
    )
    recall = np.divide(
        true_positive, actual, out=np.zeros_like(true_positive), where=actual > 0
    )
    return precision, recall


def macro_f1(cm: ConfusionMatrix) -> float:
    """Unweighted mean over classes of 2 * p * r / (p + r)."""
    precision, recall = per_class_precision_recall(cm)
    denominator = precision + recall
    f1 = np.divide(
        2.0 * precision * recall,
        denominator,
        out=np.zeros_like(denominator),
        where=denominator > 0,
    )
    return float(f1.mean())


def cohen_kappa(cm: ConfusionMatrix) -> float:
    """Chance-corrected agreement (p_o - p_e) / (1 - p_e).

    When chance agreement is total (p_e = 1), the value is defined as 1
    for perfect agreement and 0 otherwise.
    """
    n = cm.n
    observed = float(np.trace(cm.counts)) / n
    expected = float((cm.actual_totals * cm.predicted_totals).sum()) / (n * n)
    if abs(1.0 - expected) < 1e-15:
        return 1.0 if abs(1.0 - observed) < 1e-15 else 0.0
    return (observed - expected) / (1.0 - expected)


@dataclass(frozen=True)
class MetricsReport:
    """Accuracy, macro F-1 and kappa plus per-class precision/recall."""

    accuracy: float
    macro_f1: float
    kappa: float
    per_class: dict
    fold_count: int

    @classmethod
    def from_confusion(cls, cm: ConfusionMatrix, fold_count: int = 1) -> "MetricsReport":
        precision, recall = per_class_precision_recall(cm)
        per_class = {
            c: {"precision": float(p), "recall": float(r)}
            for c, p, r in zip(cm.classes, precision, recall)
        }
        return cls(
            accuracy=accuracy(cm),
            macro_f1=macro_f1(cm),
            kappa=cohen_kappa(cm),
            per_class=per_class,
            fold_count=fold_count,
        )
