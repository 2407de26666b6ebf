"""The three-stage detector: general class, then label, then freshness.

Stage 1 classifies into the four general classes on all training rows.
Stage 2 holds one classifier per class, trained only on that class's
rows. Stage 3 holds one small freshness net per label, trained only on
that label's rows. Routing is hard: the top-1 decision at each stage
picks which model sees the input next. A class with a single label, or
a label with a single freshness level, becomes an explicit constant
stub so sparse corpora stay trainable.

The one-step baseline for ablations trains a single classifier over
joint (label, freshness) codes; the code mapping is a bijection over
the 14 x 4 = 56 possible pairs.
"""

from __future__ import annotations

import json
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifiers import (
    AlgorithmSpec,
    ConstantClassifier,
    build_classifier,
    freshness_net,
    load_model,
    save_model,
)
from .errors import CorruptModel, InsufficientClasses, MissingBranch
from .features import Dataset, extract_features
from .seeding import derive_seed
from .session import MeasurementSession
from .taxonomy import FreshnessLevel, GeneralClass, SpecificLabel
from .validation import as_feature_matrix

_N_FRESHNESS = len(FreshnessLevel)
_LABELS = list(SpecificLabel)


def encode_joint(label: SpecificLabel, freshness: FreshnessLevel) -> int:
    """Bijective code for a (label, freshness) pair: 0..55."""
    return label.index * _N_FRESHNESS + freshness.index


def decode_joint(code: int) -> tuple[SpecificLabel, FreshnessLevel]:
    label_index, freshness_index = divmod(int(code), _N_FRESHNESS)
    if not 0 <= label_index < len(_LABELS):
        raise ValueError(f"joint code {code} out of range")
    return _LABELS[label_index], list(FreshnessLevel)[freshness_index]


@dataclass(frozen=True)
class StageAssignment:
    """Which algorithm runs at stage 1 and per class at stage 2.

    Stage 3 is fixed: the compact freshness net, one per label.
    """

    stage1: AlgorithmSpec
    stage2: dict = field(default_factory=dict)  # GeneralClass -> AlgorithmSpec

    @classmethod
    def uniform(cls, stage1: AlgorithmSpec, stage2: AlgorithmSpec | None = None):
        """Same stage-2 spec for every class (defaults to the stage-1 spec)."""
        stage2 = stage2 or stage1
        return cls(stage1=stage1, stage2={c: stage2 for c in GeneralClass})

    def stage2_spec(self, general_class: GeneralClass) -> AlgorithmSpec:
        return self.stage2.get(general_class, self.stage1)


@dataclass(frozen=True)
class Verdict:
    """Outcome of one detection: the three decisions plus stage evidence."""

    general_class: GeneralClass
    specific_label: SpecificLabel
    freshness: FreshnessLevel
    class_probabilities: dict
    label_probabilities: dict
    freshness_probabilities: dict
    cycle_votes: tuple = ()

    @property
    def joint_code(self) -> int:
        return encode_joint(self.specific_label, self.freshness)


@dataclass
class HierarchicalModel:
    """Trained cascade plus an audit of which rows each branch saw."""

    stage1: object
    stage2: dict  # GeneralClass -> classifier
    stage3: dict  # SpecificLabel -> classifier
    seed: int
    stubs: dict = field(default_factory=dict)
    audit: dict = field(default_factory=dict)

    def predict(self, vector) -> Verdict:
        return predict_multistep(self, vector)

    def predict_session(self, session: MeasurementSession) -> Verdict:
        return predict_session(self, session)


def _branch_audit(dataset: Dataset, rows: np.ndarray) -> dict:
    return {
        "rows": int(rows.size),
        "sessions": sorted(set(dataset.session_ids[rows])),
    }


def train_multistep(
    assignment: StageAssignment, dataset: Dataset, seed: int
) -> HierarchicalModel:
    """Fit stage 1 on everything, each branch only on its own rows."""
    present_classes = sorted(set(dataset.class_targets))
    if len(present_classes) < 2:
        raise InsufficientClasses(
            f"corpus has {len(present_classes)} general class(es); the cascade needs 2+"
        )
    stubs: dict = {"stage2": {}, "stage3": {}}
    audit: dict = {"stage1": _branch_audit(dataset, np.arange(dataset.n_rows)), "stage2": {}, "stage3": {}}

    stage1 = build_classifier(assignment.stage1, derive_seed(seed, "stage1")).fit(
        dataset.features, dataset.class_targets
    )

    stage2: dict = {}
    for general_class in present_classes:
        rows = np.flatnonzero(dataset.class_targets == general_class)
        labels_here = sorted(set(dataset.label_targets[rows]))
        audit["stage2"][general_class.value] = _branch_audit(dataset, rows)
        if len(labels_here) == 1:
            stage2[general_class] = ConstantClassifier(labels_here[0]).fit()
            stubs["stage2"][general_class.value] = labels_here[0].value
            continue
        spec = assignment.stage2_spec(general_class)
        branch_seed = derive_seed(seed, "stage2", general_class.value)
        stage2[general_class] = build_classifier(spec, branch_seed).fit(
            dataset.features[rows], dataset.label_targets[rows]
        )

    stage3: dict = {}
    for label in sorted(set(dataset.label_targets)):
        rows = np.flatnonzero(dataset.label_targets == label)
        levels_here = sorted(set(dataset.freshness_targets[rows]))
        audit["stage3"][label.value] = _branch_audit(dataset, rows)
        if len(levels_here) == 1:
            stage3[label] = ConstantClassifier(levels_here[0]).fit()
            stubs["stage3"][label.value] = levels_here[0].value
            continue
        branch_seed = derive_seed(seed, "stage3", label.value)
        stage3[label] = freshness_net(seed=branch_seed).fit(
            dataset.features[rows], dataset.freshness_targets[rows]
        )

    return HierarchicalModel(
        stage1=stage1, stage2=stage2, stage3=stage3, seed=seed, stubs=stubs, audit=audit
    )


def _probability_dict(model, probabilities: np.ndarray) -> dict:
    return {c: float(p) for c, p in zip(model.classes_, probabilities)}


def predict_multistep(model: HierarchicalModel, vector) -> Verdict:
    """Route one 40-predictor vector through the cascade (hard routing)."""
    X = as_feature_matrix(vector)
    class_probs = model.stage1.predict_proba(X)[0]
    general_class = model.stage1.classes_[int(np.argmax(class_probs))]
    stage2 = model.stage2.get(general_class)
    if stage2 is None:
        raise MissingBranch(f"no stage-2 model for class {general_class!r}")
    label_probs = stage2.predict_proba(X)[0]
    label = stage2.classes_[int(np.argmax(label_probs))]
    stage3 = model.stage3.get(label)
    if stage3 is None:
        raise MissingBranch(f"no freshness model for label {label!r}")
    freshness_probs = stage3.predict_proba(X)[0]
    freshness = stage3.classes_[int(np.argmax(freshness_probs))]
    return Verdict(
        general_class=general_class,
        specific_label=label,
        freshness=freshness,
        class_probabilities=_probability_dict(model.stage1, class_probs),
        label_probabilities=_probability_dict(stage2, label_probs),
        freshness_probabilities=_probability_dict(stage3, freshness_probs),
    )


def _majority(probabilities: np.ndarray, classes: np.ndarray):
    """Majority vote over rows; ties by mean probability, then class order.

    Permutation of the rows cannot change the outcome.
    """
    votes = np.argmax(probabilities, axis=1)
    tallies = np.bincount(votes, minlength=len(classes))
    best = np.flatnonzero(tallies == tallies.max())
    if best.size > 1:
        means = probabilities[:, best].mean(axis=0)
        best = best[np.flatnonzero(means == means.max())]
    return int(best[0]), votes


def predict_session(model: HierarchicalModel, session: MeasurementSession) -> Verdict:
    """Session-level verdict: per-cycle votes aggregated stage by stage.

    Each stage scores every cycle under the branch the previous stage
    settled on, then takes the majority.
    """
    X = np.vstack([extract_features(c) for c in session.cycles])

    class_probs = model.stage1.predict_proba(X)
    class_pick, class_votes = _majority(class_probs, model.stage1.classes_)
    general_class = model.stage1.classes_[class_pick]

    stage2 = model.stage2.get(general_class)
    if stage2 is None:
        raise MissingBranch(f"no stage-2 model for class {general_class!r}")
    label_probs = stage2.predict_proba(X)
    label_pick, label_votes = _majority(label_probs, stage2.classes_)
    label = stage2.classes_[label_pick]

    stage3 = model.stage3.get(label)
    if stage3 is None:
        raise MissingBranch(f"no freshness model for label {label!r}")
    freshness_probs = stage3.predict_proba(X)
    freshness_pick, freshness_votes = _majority(freshness_probs, stage3.classes_)
    freshness = stage3.classes_[freshness_pick]

    cycle_votes = tuple(
        (
            model.stage1.classes_[cv],
            stage2.classes_[lv],
            stage3.classes_[fv],
        )
        for cv, lv, fv in zip(class_votes, label_votes, freshness_votes)
    )
    return Verdict(
        general_class=general_class,
        specific_label=label,
        freshness=freshness,
        class_probabilities=_probability_dict(model.stage1, class_probs.mean(axis=0)),
        label_probabilities=_probability_dict(stage2, label_probs.mean(axis=0)),
        freshness_probabilities=_probability_dict(stage3, freshness_probs.mean(axis=0)),
        cycle_votes=cycle_votes,
    )


def train_flat(spec: AlgorithmSpec, dataset: Dataset, seed: int):
    """One-step baseline: a single classifier over joint (label, freshness)."""
    from .classifiers import train_classifier

    return train_classifier(spec, dataset.features, dataset.targets("joint"), seed)


def flat_verdict(model, vector) -> Verdict:
    """Decode a one-step prediction into the three-part verdict."""
    X = as_feature_matrix(vector)
    probabilities = model.predict_proba(X)[0]
    code = model.classes_[int(np.argmax(probabilities))]
    label, freshness = decode_joint(code)
    joint_probs = {int(c): float(p) for c, p in zip(model.classes_, probabilities)}
    return Verdict(
        general_class=label.general_class,
        specific_label=label,
        freshness=freshness,
        class_probabilities={},
        label_probabilities=joint_probs,
        freshness_probabilities={},
    )


# -- bundle persistence -------------------------------------------------------

_BUNDLE_FORMAT = "enose-bundle"
_BUNDLE_VERSION = 1


def save_bundle(model: HierarchicalModel, directory) -> None:
    """Write the cascade as a directory; replace the target atomically."""
    directory = Path(directory)
    directory.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(
        tempfile.mkdtemp(prefix=f".{directory.name}.partial-", dir=directory.parent)
    )
    try:
        manifest = {
            "format": _BUNDLE_FORMAT,
            "format_version": _BUNDLE_VERSION,
            "seed": model.seed,
            "classes": sorted(c.value for c in model.stage2),
            "labels": sorted(lab.value for lab in model.stage3),
            "stubs": model.stubs,
            "audit": model.audit,
        }
        (staging / "manifest.json").write_text(
            json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        (staging / "stage1.model").write_bytes(save_model(model.stage1))
        (staging / "stage2").mkdir()
        for general_class, clf in model.stage2.items():
            (staging / "stage2" / f"{general_class.value}.model").write_bytes(
                save_model(clf)
            )
        (staging / "stage3").mkdir()
        for label, clf in model.stage3.items():
            (staging / "stage3" / f"{label.value}.model").write_bytes(save_model(clf))
        if directory.exists():
            shutil.rmtree(directory)
        os.replace(staging, directory)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise


def load_bundle(directory) -> HierarchicalModel:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.is_file():
        raise CorruptModel(f"{directory} is not a model bundle (no manifest)")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"bundle manifest is not valid JSON: {exc}") from exc
    if manifest.get("format") != _BUNDLE_FORMAT:
        raise CorruptModel("bundle manifest has the wrong format marker")
    if manifest.get("format_version") != _BUNDLE_VERSION:
        from .errors import VersionMismatch

        raise VersionMismatch(
            f"unsupported bundle version {manifest.get('format_version')!r}"
        )

    def read_model(path: Path):
        if not path.is_file():
            raise CorruptModel(f"bundle is missing {path.name}")
        return load_model(path.read_bytes())

    stage1 = read_model(directory / "stage1.model")
    stage2 = {
        GeneralClass(name): read_model(directory / "stage2" / f"{name}.model")
        for name in manifest.get("classes", [])
    }
    stage3 = {
        SpecificLabel(name): read_model(directory / "stage3" / f"{name}.model")
        for name in manifest.get("labels", [])
    }
    return HierarchicalModel(
        stage1=stage1,
        stage2=stage2,
        stage3=stage3,
        seed=manifest.get("seed", 0),
        stubs=manifest.get("stubs", {}),
        audit=manifest.get("audit", {}),
    )
