"""Fold plans, leakage hygiene, cross-validation oracles, selection, ablation."""

import hashlib

import numpy as np
import pytest
from sklearn.base import BaseEstimator

from enose.classifiers import AlgorithmSpec
from enose.errors import TooFewSessions
from enose.evaluate import (
    audit_plan,
    cross_validate,
    plan_loso,
    run_ablation,
    select_stage_models,
)
from enose.features import build_dataset
from enose.hierarchy import StageAssignment
from enose.synth import SynthConfig, cells_for_classes, generate_corpus
from enose.taxonomy import GeneralClass

LOGREG = AlgorithmSpec("logreg")
TREE_RAW = AlgorithmSpec("tree", "raw")


def corpus(cells=None, sessions=3, k=4, seed=7, **overrides):
    config = dict(
        seed=seed,
        sessions_per_cell=sessions,
        cycles_per_session=k,
        class_separation=10.0,
        label_separation=3.0,
        freshness_drift=4.0,
        noise_sigma=0.2,
        session_jitter=0.15,
        cells=cells,
    )
    config.update(overrides)
    return build_dataset(generate_corpus(SynthConfig(**config)))


class TestFoldPlan:
    def test_one_fold_per_session(self):
        dataset = corpus(cells=cells_for_classes(GeneralClass.MEAT), sessions=1, k=2)
        plan = plan_loso(dataset)
        assert len(plan) == 12  # 3 labels x 4 levels x 1 session

    def test_no_fold_trains_on_its_session(self):
        dataset = corpus(cells=cells_for_classes(GeneralClass.MEAT), sessions=1, k=2)
        plan = plan_loso(dataset)
        for fold in plan.folds:
            train_sessions = set(dataset.session_ids[fold.train_indices])
            assert fold.session_id not in train_sessions
            validation_sessions = set(dataset.session_ids[fold.validation_indices])
            assert validation_sessions == {fold.session_id}

    def test_single_session_rejected(self):
        dataset = corpus(cells=((list(cells_for_classes(GeneralClass.MEAT))[0]),), sessions=1)
        with pytest.raises(TooFewSessions):
            plan_loso(dataset)

    def test_audit_reports_no_overlap(self):
        dataset = corpus(cells=cells_for_classes(GeneralClass.FRUIT), sessions=2, k=2)
        plan = plan_loso(dataset)
        report = audit_plan(plan, dataset)
        assert len(report) == len(plan)
        assert all(entry["overlap"] == [] for entry in report)

    def test_train_and_validation_indices_disjoint(self):
        dataset = corpus(cells=cells_for_classes(GeneralClass.FRUIT), sessions=2, k=2)
        for fold in plan_loso(dataset).folds:
            assert not set(fold.train_indices) & set(fold.validation_indices)

    def test_fingerprint_stable(self):
        dataset = corpus(cells=cells_for_classes(GeneralClass.MEAT), sessions=2, k=2)
        assert plan_loso(dataset).fingerprint() == plan_loso(dataset).fingerprint()


class MemorizingRandomClassifier(BaseEstimator):
    """Returns the stored answer for training rows, a die roll otherwise.

    The die is a hash of the row bytes, so the classifier stays
    deterministic while behaving like a uniform guesser on new rows.
    """

    def __init__(self, seed=0):
        self.seed = seed

    def fit(self, X, y):
        self.memory_ = {np.asarray(row).tobytes(): label for row, label in zip(X, y)}
        self.classes_ = np.array(sorted(set(y)), dtype=object)
        self.n_features_in_ = np.asarray(X).shape[1]
        return self

    def predict(self, X):
        out = []
        for row in np.asarray(X):
            key = row.tobytes()
            if key in self.memory_:
                out.append(self.memory_[key])
            else:
                digest = hashlib.sha256(key + str(self.seed).encode()).digest()
                out.append(self.classes_[int.from_bytes(digest[:4], "big") % len(self.classes_)])
        return np.array(out, dtype=object)

    def predict_proba(self, X):
        predictions = self.predict(X)
        proba = np.zeros((len(predictions), len(self.classes_)))
        lookup = {c: i for i, c in enumerate(self.classes_)}
        for i, p in enumerate(predictions):
            proba[i, lookup[p]] = 1.0
        return proba


class TestCrossValidate:
    def test_memorizer_scores_at_chance(self):
        # held-out rows never appear in training, so pooled accuracy must
        # land within binomial noise of 1/k
        dataset = corpus(cells=cells_for_classes(GeneralClass.MEAT, GeneralClass.FRUIT),
                         sessions=2, k=3)
        report = cross_validate(MemorizingRandomClassifier(), dataset, seed=0, target="class")
        n = dataset.n_rows
        p = 1.0 / 2  # two classes present
        sigma = np.sqrt(p * (1 - p) / n)
        assert abs(report.pooled.accuracy - p) <= 3 * sigma

    def test_memorizer_four_classes(self):
        dataset = corpus(sessions=1, k=3)
        report = cross_validate(MemorizingRandomClassifier(), dataset, seed=0, target="class")
        n = dataset.n_rows
        p = 0.25
        sigma = np.sqrt(p * (1 - p) / n)
        assert abs(report.pooled.accuracy - p) <= 3 * sigma

    def test_separable_corpus_perfect_accuracy(self):
        dataset = corpus(cells=cells_for_classes(GeneralClass.MEAT, GeneralClass.DRINK),
                         sessions=2, k=2, class_separation=20.0, noise_sigma=0.1,
                         session_jitter=0.05)
        report = cross_validate(LOGREG, dataset, seed=1, target="class")
        assert report.pooled.accuracy == 1.0

    def test_fold_count_equals_sessions(self):
        dataset = corpus(cells=cells_for_classes(GeneralClass.MEAT), sessions=2, k=2)
        report = cross_validate(TREE_RAW, dataset, seed=1, target="label")
        assert report.fold_count == len(dataset.session_order())
        assert report.pooled.fold_count == report.fold_count

    def test_pooled_matrix_is_fold_sum(self):
        dataset = corpus(cells=cells_for_classes(GeneralClass.MEAT), sessions=2, k=2)
        report = cross_validate(TREE_RAW, dataset, seed=1, target="label")
        assert report.pooled_confusion.n == dataset.n_rows
        total = np.zeros_like(report.pooled_confusion.counts)
        for cm in report.fold_confusions:
            total = total + cm.counts
        assert np.array_equal(total, report.pooled_confusion.counts)

    def test_mean_and_pooled_both_reported(self):
        dataset = corpus(cells=cells_for_classes(GeneralClass.MEAT), sessions=2, k=2)
        report = cross_validate(TREE_RAW, dataset, seed=1, target="label")
        assert set(report.mean) == {"accuracy", "f1", "kappa"}
        assert len(report.per_fold) == report.fold_count

    def test_parallel_folds_identical(self):
        dataset = corpus(cells=cells_for_classes(GeneralClass.MEAT), sessions=2, k=2)
        serial = cross_validate(LOGREG, dataset, seed=4, target="label", jobs=1)
        threaded = cross_validate(LOGREG, dataset, seed=4, target="label", jobs=4)
        assert np.array_equal(serial.pooled_confusion.counts, threaded.pooled_confusion.counts)
        assert serial.per_fold == threaded.per_fold


class TestMultistepCrossValidate:
    def test_reports_all_stages(self):
        dataset = corpus(cells=cells_for_classes(GeneralClass.MEAT, GeneralClass.FRUIT),
                         sessions=2, k=2)
        report = cross_validate(StageAssignment.uniform(LOGREG), dataset, seed=1)
        assert report.stage1.target == "stage1"
        assert report.end_to_end.target == "end-to-end"
        assert report.fold_count == len(dataset.session_order())
        for sub in (report.stage1, report.stage2, report.stage3, report.end_to_end):
            assert 0.0 <= sub.pooled.accuracy <= 1.0

    def test_end_to_end_accuracy_not_above_stage2(self):
        # both label and freshness must be right, so end-to-end can never
        # beat the label stage alone
        dataset = corpus(cells=cells_for_classes(GeneralClass.MEAT, GeneralClass.FRUIT),
                         sessions=2, k=2)
        report = cross_validate(StageAssignment.uniform(LOGREG), dataset, seed=1)
        assert report.end_to_end.pooled.accuracy <= report.stage2.pooled.accuracy + 1e-9


class TestSelection:
    def test_single_candidate_wins_everywhere(self):
        dataset = corpus(cells=cells_for_classes(GeneralClass.MEAT, GeneralClass.FRUIT),
                         sessions=2, k=2)
        selection = select_stage_models([LOGREG], dataset, seed=1)
        assert selection.stage1.winner == LOGREG
        assert all(
            table.winner == LOGREG or table.winner is None
            for table in selection.stage2.values()
        )

    def test_dummy_never_beats_real_candidate(self):
        class MajorityDummy(BaseEstimator):
            def __init__(self, seed=0):
                self.seed = seed

            def fit(self, X, y):
                values, counts = np.unique(np.asarray(y, dtype=object), return_counts=True)
                self.constant_ = values[np.argmax(counts)]
                self.classes_ = values
                self.n_features_in_ = np.asarray(X).shape[1]
                return self

            def predict(self, X):
                return np.array([self.constant_] * np.asarray(X).shape[0], dtype=object)

            def predict_proba(self, X):
                proba = np.zeros((np.asarray(X).shape[0], len(self.classes_)))
                proba[:, list(self.classes_).index(self.constant_)] = 1.0
                return proba

        dataset = corpus(cells=cells_for_classes(GeneralClass.MEAT, GeneralClass.FRUIT),
                         sessions=2, k=2)
        real = cross_validate(LOGREG, dataset, seed=1, target="class")
        dummy = cross_validate(MajorityDummy(), dataset, seed=1, target="class")
        assert real.pooled.accuracy > dummy.pooled.accuracy

    def test_table_shape(self):
        dataset = corpus(cells=cells_for_classes(GeneralClass.MEAT, GeneralClass.FRUIT),
                         sessions=2, k=2)
        selection = select_stage_models([LOGREG, TREE_RAW], dataset, seed=1)
        assert len(selection.stage1.rows) == 2
        for spec, report in selection.stage1.rows:
            row = report.row()
            assert set(row) == {"algorithm", "stage", "accuracy", "f1", "kappa", "per_fold"}

    def test_stub_class_recorded(self):
        cells = cells_for_classes(GeneralClass.MEAT) + tuple(
            (label, fresh)
            for label, fresh in cells_for_classes(GeneralClass.DRINK)
            if label.value == "coffee"
        )
        dataset = corpus(cells=cells, sessions=2, k=2)
        selection = select_stage_models([LOGREG], dataset, seed=1)
        assert selection.stage2[GeneralClass.DRINK].winner is None
        assert selection.stage2[GeneralClass.DRINK].stub.value == "coffee"


@pytest.fixture(scope="module")
def small_ablation():
    dataset = corpus(
        cells=cells_for_classes(GeneralClass.MEAT, GeneralClass.FRUIT),
        sessions=2, k=2, seed=3,
    )
    return run_ablation([LOGREG, TREE_RAW], dataset, seed=1), dataset


class TestAblation:

    def test_row_count(self, small_ablation):
        report, _ = small_ablation
        assert len(report.rows()) == 1 + 2

    def test_shared_fold_plan(self, small_ablation):
        report, dataset = small_ablation
        assert report.plan_fingerprint == plan_loso(dataset).fingerprint()

    def test_multistep_not_worse_than_flat(self, small_ablation):
        # the corpus is built so the hierarchy helps; verified by running
        # both arms under the shared plan
        report, _ = small_ablation
        assert report.multistep.pooled.accuracy >= report.best_flat_accuracy()

    def test_row_schema(self, small_ablation):
        report, _ = small_ablation
        for row in report.rows():
            assert set(row) == {"algorithm", "stage", "accuracy", "f1", "kappa", "per_fold"}
