"""Leave-one-session-out evaluation, stage selection and the ablation.

Every fold holds out all observations of one measurement session, so
within-session similarity cannot inflate validation scores. Models are
rebuilt per fold from a fold-derived seed, and anything fitted on data
(the projection included) refits inside the fold. Pooled metrics over
the summed confusion matrix are primary; the across-fold mean of each
metric is reported alongside.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from sklearn.base import clone

from .classifiers import AlgorithmSpec, build_classifier
from .errors import MissingBranch, TooFewSessions
from .features import Dataset
from .hierarchy import StageAssignment, encode_joint, train_multistep
from .metrics import ConfusionMatrix, MetricsReport, cohen_kappa, confusion, macro_f1
from .seeding import derive_seed


@dataclass(frozen=True)
class Fold:
    session_id: str
    train_indices: np.ndarray
    validation_indices: np.ndarray


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[Fold, ...]

    def __len__(self) -> int:
        return len(self.folds)

    def fingerprint(self) -> str:
        """Stable serialization used to prove two runs shared the folds."""
        doc = [
            {
                "session": f.session_id,
                "train": f.train_indices.tolist(),
                "validation": f.validation_indices.tolist(),
            }
            for f in self.folds
        ]
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def plan_loso(dataset: Dataset) -> FoldPlan:
    """One fold per session, in order of first appearance in the corpus."""
    order = dataset.session_order()
    if len(order) < 2:
        raise TooFewSessions(
            f"leave-one-session-out needs >= 2 sessions, corpus has {len(order)}"
        )
    folds = []
    all_indices = np.arange(dataset.n_rows)
    for session_id in order:
        held_out = dataset.session_ids == session_id
        folds.append(
            Fold(
                session_id=session_id,
                train_indices=all_indices[~held_out],
                validation_indices=all_indices[held_out],
            )
        )
    return FoldPlan(tuple(folds))


def audit_plan(plan: FoldPlan, dataset: Dataset) -> list[dict]:
    """Per-fold session bookkeeping; overlap lists must all come back empty."""
    report = []
    for fold in plan.folds:
        train_sessions = set(dataset.session_ids[fold.train_indices])
        validation_sessions = set(dataset.session_ids[fold.validation_indices])
        report.append(
            {
                "session_id": fold.session_id,
                "train_session_count": len(train_sessions),
                "overlap": sorted(train_sessions & validation_sessions),
            }
        )
    return report


@dataclass(frozen=True)
class CvReport:
    """Cross-validation outcome for one model on one target column."""

    algorithm: str
    target: str
    classes: tuple
    pooled_confusion: ConfusionMatrix
    fold_confusions: tuple
    pooled: MetricsReport
    per_fold: tuple
    mean: dict
    fold_count: int
    audit: tuple

    def row(self) -> dict:
        """The report row shape used by the JSON emitters."""
        return {
            "algorithm": self.algorithm,
            "stage": self.target,
            "accuracy": self.pooled.accuracy,
            "f1": self.pooled.macro_f1,
            "kappa": self.pooled.kappa,
            "per_fold": list(self.per_fold),
        }


@dataclass(frozen=True)
class MultistepCvReport:
    """End-to-end (both label and freshness correct) plus per-stage views.

    The end-to-end view routes each row through predicted branches; the
    per-stage views condition stages 2 and 3 on the true class/label so
    each stage is judged on its own problem.
    """

    end_to_end: CvReport
    stage1: CvReport
    stage2: CvReport
    stage3: CvReport
    fold_count: int

    @property
    def pooled(self) -> MetricsReport:
        return self.end_to_end.pooled

    def rows(self) -> list[dict]:
        return [
            self.end_to_end.row(),
            self.stage1.row(),
            self.stage2.row(),
            self.stage3.row(),
        ]


def _fold_metrics(cm: ConfusionMatrix, session_id: str) -> dict:
    return {
        "session_id": session_id,
        "accuracy": float(np.trace(cm.counts)) / cm.n,
        "f1": macro_f1(cm),
        "kappa": cohen_kappa(cm),
    }


def _mean_metrics(per_fold: list[dict]) -> dict:
    return {
        "accuracy": float(np.mean([f["accuracy"] for f in per_fold])),
        "f1": float(np.mean([f["f1"] for f in per_fold])),
        "kappa": float(np.mean([f["kappa"] for f in per_fold])),
    }


def _assemble(algorithm, target, classes, fold_results, plan, dataset) -> CvReport:
    pooled = fold_results[0]
    for cm in fold_results[1:]:
        pooled = pooled + cm
    per_fold = tuple(
        _fold_metrics(cm, fold.session_id) for cm, fold in zip(fold_results, plan.folds)
    )
    return CvReport(
        algorithm=algorithm,
        target=target,
        classes=tuple(classes),
        pooled_confusion=pooled,
        fold_confusions=tuple(fold_results),
        pooled=MetricsReport.from_confusion(pooled, fold_count=len(plan)),
        per_fold=per_fold,
        mean=_mean_metrics(list(per_fold)),
        fold_count=len(plan),
        audit=tuple(audit_plan(plan, dataset)),
    )


def _build_fold_model(model, fold_seed: int):
    if isinstance(model, AlgorithmSpec):
        return build_classifier(model, fold_seed)
    fresh = clone(model)
    if "seed" in fresh.get_params(deep=False):
        fresh.set_params(seed=fold_seed)
    return fresh


def _run_folds(plan: FoldPlan, jobs: int, worker):
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(worker, range(len(plan.folds))))
    return [worker(i) for i in range(len(plan.folds))]


def _algorithm_name(model) -> str:
    if isinstance(model, AlgorithmSpec):
        return model.token
    return type(model).__name__


def cross_validate(model, dataset: Dataset, seed: int, *, target: str = "class",
                   plan: FoldPlan | None = None, jobs: int = 1):
    """LOSO-validate a spec, a bare estimator, or a full stage assignment.

    Stage assignments return a :class:`MultistepCvReport`; anything else
    is trained on ``dataset.targets(target)`` and returns a
    :class:`CvReport`.
    """
    plan = plan or plan_loso(dataset)
    if isinstance(model, StageAssignment):
        return _cross_validate_multistep(model, dataset, seed, plan, jobs)

    y = dataset.targets(target)
    classes = tuple(sorted(set(y)))

    def worker(fold_index: int) -> ConfusionMatrix:
        fold = plan.folds[fold_index]
        fitted = _build_fold_model(model, derive_seed(seed, "fold", fold_index)).fit(
            dataset.features[fold.train_indices], y[fold.train_indices]
        )
        predicted = fitted.predict(dataset.features[fold.validation_indices])
        return confusion(y[fold.validation_indices], predicted, classes=classes)

    fold_results = _run_folds(plan, jobs, worker)
    return _assemble(_algorithm_name(model), target, classes, fold_results, plan, dataset)


def _predict_multistep_batch(model, X: np.ndarray):
    """Route a batch through the cascade; returns per-row joint codes."""
    n = X.shape[0]
    class_idx = np.argmax(model.stage1.predict_proba(X), axis=1)
    predicted_class = model.stage1.classes_[class_idx]
    labels = np.empty(n, dtype=object)
    freshness = np.empty(n, dtype=object)
    for general_class in set(predicted_class):
        branch = model.stage2.get(general_class)
        if branch is None:
            raise MissingBranch(f"no stage-2 model for class {general_class!r}")
        rows = np.flatnonzero(predicted_class == general_class)
        picks = np.argmax(branch.predict_proba(X[rows]), axis=1)
        labels[rows] = branch.classes_[picks]
    for label in set(labels):
        branch = model.stage3.get(label)
        if branch is None:
            raise MissingBranch(f"no freshness model for label {label!r}")
        rows = np.flatnonzero(labels == label)
        picks = np.argmax(branch.predict_proba(X[rows]), axis=1)
        freshness[rows] = branch.classes_[picks]
    codes = np.array(
        [encode_joint(lab, fresh) for lab, fresh in zip(labels, freshness)], dtype=object
    )
    return predicted_class, labels, freshness, codes


def _cross_validate_multistep(assignment: StageAssignment, dataset: Dataset, seed: int,
                              plan: FoldPlan, jobs: int) -> MultistepCvReport:
    joint = dataset.targets("joint")
    class_list = tuple(sorted(set(dataset.class_targets)))
    label_list = tuple(sorted(set(dataset.label_targets)))
    freshness_list = tuple(sorted(set(dataset.freshness_targets)))
    joint_list = tuple(sorted(set(joint)))

    def worker(fold_index: int):
        fold = plan.folds[fold_index]
        model = train_multistep(
            assignment,
            dataset.subset(fold.train_indices),
            derive_seed(seed, "fold", fold_index),
        )
        X_val = dataset.features[fold.validation_indices]
        val = fold.validation_indices

        predicted_class, _, _, predicted_joint = _predict_multistep_batch(model, X_val)
        cm_e2e = confusion(joint[val], predicted_joint, classes=joint_list)
        cm_stage1 = confusion(
            dataset.class_targets[val], predicted_class, classes=class_list
        )

        # stages 2 and 3 judged with true-branch conditioning
        true_labels = dataset.label_targets[val]
        predicted_labels = np.empty(val.size, dtype=object)
        for general_class in set(dataset.class_targets[val]):
            branch = model.stage2.get(general_class)
            if branch is None:
                raise MissingBranch(f"no stage-2 model for class {general_class!r}")
            rows = np.flatnonzero(dataset.class_targets[val] == general_class)
            picks = np.argmax(branch.predict_proba(X_val[rows]), axis=1)
            predicted_labels[rows] = branch.classes_[picks]
        cm_stage2 = confusion(true_labels, predicted_labels, classes=label_list)

        predicted_freshness = np.empty(val.size, dtype=object)
        for label in set(true_labels):
            branch = model.stage3.get(label)
            if branch is None:
                raise MissingBranch(f"no freshness model for label {label!r}")
            rows = np.flatnonzero(true_labels == label)
            picks = np.argmax(branch.predict_proba(X_val[rows]), axis=1)
            predicted_freshness[rows] = branch.classes_[picks]
        cm_stage3 = confusion(
            dataset.freshness_targets[val], predicted_freshness, classes=freshness_list
        )
        return cm_e2e, cm_stage1, cm_stage2, cm_stage3

    results = _run_folds(plan, jobs, worker)
    e2e, stage1, stage2, stage3 = zip(*results)
    return MultistepCvReport(
        end_to_end=_assemble("multi-step", "end-to-end", joint_list, list(e2e), plan, dataset),
        stage1=_assemble("multi-step", "stage1", class_list, list(stage1), plan, dataset),
        stage2=_assemble("multi-step", "stage2", label_list, list(stage2), plan, dataset),
        stage3=_assemble("multi-step", "stage3", freshness_list, list(stage3), plan, dataset),
        fold_count=len(plan),
    )


@dataclass(frozen=True)
class StageTable:
    """Candidate comparison for one stage: one CvReport row per candidate."""

    stage: str
    rows: tuple
    winner: AlgorithmSpec | None
    stub: object = None

    def winner_row(self) -> dict | None:
        for spec, report in self.rows:
            if spec == self.winner:
                return report.row()
        return None


@dataclass(frozen=True)
class StageSelection:
    stage1: StageTable
    stage2: dict

    def to_assignment(self) -> StageAssignment:
        stage2 = {
            general_class: table.winner
            for general_class, table in self.stage2.items()
            if table.winner is not None
        }
        return StageAssignment(stage1=self.stage1.winner, stage2=stage2)


def _pick_winner(rows) -> AlgorithmSpec:
    best_spec, best_key = None, None
    for spec, report in rows:
        key = (report.pooled.accuracy, report.pooled.macro_f1, report.pooled.kappa)
        if best_key is None or key > best_key:  # strict: earlier candidate wins ties
            best_spec, best_key = spec, key
    return best_spec


def select_stage_models(candidates, dataset: Dataset, seed: int, *,
                        plan: FoldPlan | None = None, jobs: int = 1) -> StageSelection:
    """Cross-validate every candidate per stage and keep the best.

    Stage 1 compares on class targets over the full corpus; stage 2
    compares per class on label targets over that class's sessions.
    Ranking is pooled accuracy, then macro F-1, then kappa, then
    candidate order.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("need at least one candidate spec")
    plan = plan or plan_loso(dataset)

    stage1_rows = tuple(
        (spec, cross_validate(spec, dataset, seed, target="class", plan=plan, jobs=jobs))
        for spec in candidates
    )
    stage1 = StageTable(stage="stage1", rows=stage1_rows, winner=_pick_winner(stage1_rows))

    stage2: dict = {}
    for general_class in sorted(set(dataset.class_targets)):
        rows_here = np.flatnonzero(dataset.class_targets == general_class)
        sub = dataset.subset(rows_here)
        labels_here = sorted(set(sub.label_targets))
        stage_name = f"stage2:{general_class.value}"
        if len(labels_here) == 1:
            stage2[general_class] = StageTable(
                stage=stage_name, rows=(), winner=None, stub=labels_here[0]
            )
            continue
        table_rows = tuple(
            (spec, cross_validate(spec, sub, seed, target="label", jobs=jobs))
            for spec in candidates
        )
        stage2[general_class] = StageTable(
            stage=stage_name, rows=table_rows, winner=_pick_winner(table_rows)
        )
    return StageSelection(stage1=stage1, stage2=stage2)


@dataclass(frozen=True)
class AblationReport:
    """Multi-step vs one-step baselines under one shared fold plan."""

    multistep: MultistepCvReport
    flat: tuple
    selection: StageSelection
    plan_fingerprint: str

    def rows(self) -> list[dict]:
        out = [self.multistep.end_to_end.row()]
        for _, report in self.flat:
            row = report.row()
            row["stage"] = "one-step"
            out.append(row)
        return out

    def best_flat_accuracy(self) -> float:
        return max(report.pooled.accuracy for _, report in self.flat)


def run_ablation(candidates, dataset: Dataset, seed: int, *,
                 jobs: int = 1) -> AblationReport:
    """Compare the cascade (with per-stage winners) against flat baselines.

    Both arms run under the identical fold plan and the same correctness
    bar: label and freshness must both be right.
    """
    candidates = list(candidates)
    plan = plan_loso(dataset)
    selection = select_stage_models(candidates, dataset, seed, plan=plan, jobs=jobs)
    multistep = cross_validate(
        selection.to_assignment(), dataset, seed, plan=plan, jobs=jobs
    )
    flat = tuple(
        (spec, cross_validate(spec, dataset, seed, target="joint", plan=plan, jobs=jobs))
        for spec in candidates
    )
    return AblationReport(
        multistep=multistep,
        flat=flat,
        selection=selection,
        plan_fingerprint=plan.fingerprint(),
    )
