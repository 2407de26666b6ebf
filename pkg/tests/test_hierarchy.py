"""Cascade training, routing soundness, session voting, and the flat baseline."""

import numpy as np
import pytest

from enose.classifiers import AlgorithmSpec, ConstantClassifier, save_model
from enose.errors import InsufficientClasses, MissingBranch
from enose.features import build_dataset, extract_features
from enose.hierarchy import (
    HierarchicalModel,
    StageAssignment,
    decode_joint,
    encode_joint,
    flat_verdict,
    predict_multistep,
    predict_session,
    train_flat,
    train_multistep,
)
from enose.synth import SynthConfig, cells_for_classes, generate_corpus
from enose.taxonomy import (
    LABELS_BY_CLASS,
    FreshnessLevel,
    GeneralClass,
    SpecificLabel,
    labels_for,
)

LOGREG = AlgorithmSpec("logreg")


def small_corpus(**overrides):
    config = dict(
        seed=7,
        sessions_per_cell=1,
        cycles_per_session=2,
        class_separation=10.0,
        label_separation=3.0,
        freshness_drift=4.0,
        noise_sigma=0.2,
        session_jitter=0.1,
    )
    config.update(overrides)
    return generate_corpus(SynthConfig(**config))


class TestJointEncoding:
    def test_bijection_over_all_56_pairs(self):
        seen = set()
        for label in SpecificLabel:
            for fresh in FreshnessLevel:
                code = encode_joint(label, fresh)
                assert decode_joint(code) == (label, fresh)
                seen.add(code)
        assert seen == set(range(56))

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            decode_joint(56)


class TestTrainMultistep:
    def test_full_taxonomy_coverage(self):
        dataset = build_dataset(small_corpus())
        model = train_multistep(StageAssignment.uniform(LOGREG), dataset, seed=3)
        assert set(model.stage2) == set(GeneralClass)
        assert set(model.stage3) == set(SpecificLabel)
        assert len(model.stage3) == 14

    def test_single_label_class_becomes_stub(self):
        cells = cells_for_classes(GeneralClass.MEAT) + tuple(
            (SpecificLabel.COFFEE, fresh) for fresh in FreshnessLevel
        )
        dataset = build_dataset(small_corpus(cells=cells))
        model = train_multistep(StageAssignment.uniform(LOGREG), dataset, seed=3)
        stub = model.stage2[GeneralClass.DRINK]
        assert isinstance(stub, ConstantClassifier)
        proba = stub.predict_proba(np.zeros((1, 40)))
        assert proba[0].tolist() == [1.0]
        assert model.stubs["stage2"]["drink"] == "coffee"

    def test_single_freshness_label_becomes_stub(self):
        cells = tuple(
            (label, fresh)
            for label in labels_for(GeneralClass.MEAT)
            for fresh in FreshnessLevel
        ) + ((SpecificLabel.COFFEE, FreshnessLevel.FRESH),)
        dataset = build_dataset(small_corpus(cells=cells))
        model = train_multistep(StageAssignment.uniform(LOGREG), dataset, seed=3)
        stub = model.stage3[SpecificLabel.COFFEE]
        assert isinstance(stub, ConstantClassifier)
        assert stub.classes_[0] is FreshnessLevel.FRESH
        assert model.stubs["stage3"]["coffee"] == "fresh"

    def test_single_class_corpus_rejected(self):
        dataset = build_dataset(small_corpus(cells=cells_for_classes(GeneralClass.FRUIT)))
        with pytest.raises(InsufficientClasses):
            train_multistep(StageAssignment.uniform(LOGREG), dataset, seed=3)

    def test_deterministic_given_seed(self):
        dataset = build_dataset(
            small_corpus(cells=cells_for_classes(GeneralClass.MEAT, GeneralClass.DRINK))
        )
        a = train_multistep(StageAssignment.uniform(LOGREG), dataset, seed=11)
        b = train_multistep(StageAssignment.uniform(LOGREG), dataset, seed=11)
        assert save_model(a.stage1) == save_model(b.stage1)
        for general_class in a.stage2:
            assert save_model(a.stage2[general_class]) == save_model(b.stage2[general_class])
        for label in a.stage3:
            assert save_model(a.stage3[label]) == save_model(b.stage3[label])

    def test_stage_data_isolation_audit(self):
        sessions = small_corpus()
        dataset = build_dataset(sessions)
        model = train_multistep(StageAssignment.uniform(LOGREG), dataset, seed=3)
        for general_class, entry in model.audit["stage2"].items():
            for session_id in entry["sessions"]:
                session = next(s for s in sessions if s.session_id == session_id)
                assert session.annotation.general_class.value == general_class
        for label, entry in model.audit["stage3"].items():
            for session_id in entry["sessions"]:
                session = next(s for s in sessions if s.session_id == session_id)
                assert session.annotation.label.value == label


@pytest.fixture(scope="module")
def trained():
    sessions = small_corpus(sessions_per_cell=2)
    dataset = build_dataset(sessions)
    model = train_multistep(StageAssignment.uniform(LOGREG), dataset, seed=5)
    return sessions, dataset, model


class TestPredictMultistep:

    def test_deep_cluster_point_recovers_cell(self, trained):
        sessions, dataset, model = trained
        target = next(
            s for s in sessions
            if s.annotation.label is SpecificLabel.BANANA
            and s.annotation.freshness is FreshnessLevel.ROTTEN
        )
        verdict = predict_multistep(model, extract_features(target.cycles[0]))
        assert verdict.general_class is GeneralClass.FRUIT
        assert verdict.specific_label is SpecificLabel.BANANA
        assert verdict.freshness is FreshnessLevel.ROTTEN

    def test_routing_soundness_on_random_inputs(self, trained, rng):
        _, dataset, model = trained
        lo = dataset.features.min(axis=0)
        hi = dataset.features.max(axis=0)
        for _ in range(1000):
            v = rng.uniform(lo, hi)
            verdict = predict_multistep(model, v)
            assert verdict.specific_label in LABELS_BY_CLASS[verdict.general_class]
            assert verdict.freshness in set(FreshnessLevel)

    def test_missing_branch_reported(self, trained):
        _, dataset, model = trained
        broken = HierarchicalModel(
            stage1=model.stage1, stage2=dict(model.stage2), stage3={}, seed=0
        )
        with pytest.raises(MissingBranch):
            predict_multistep(broken, dataset.features[0])

    def test_probabilities_attached(self, trained):
        _, dataset, model = trained
        verdict = predict_multistep(model, dataset.features[0])
        assert sum(verdict.class_probabilities.values()) == pytest.approx(1.0)
        assert sum(verdict.freshness_probabilities.values()) == pytest.approx(1.0)


class _ScriptedStage:
    """Fake classifier: per-row probabilities scripted by the test."""

    def __init__(self, classes, table):
        self.classes_ = np.array(classes, dtype=object)
        self.table = {k: np.asarray(v, dtype=np.float64) for k, v in table.items()}

    def predict_proba(self, X):
        return np.vstack([self.table[row[0]] for row in np.asarray(X)])

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


def scripted_model(stage1, stage2_map, stage3_map):
    return HierarchicalModel(stage1=stage1, stage2=stage2_map, stage3=stage3_map, seed=0)


def session_with_markers(markers):
    from enose.session import Annotation, MeasurementSession, ScanCycle, StepReading

    def cycle(marker):
        return ScanCycle(
            steps=tuple(
                StepReading(
                    step_index=s,
                    temperature_c=float(marker),
                    pressure_hpa=1000.0,
                    humidity_pct=50.0,
                    resistance_ohm=1e5,
                )
                for s in range(10)
            )
        )

    return MeasurementSession(
        session_id="scripted",
        annotation=Annotation(
            general_class=GeneralClass.FRUIT,
            label=SpecificLabel.BANANA,
            freshness=FreshnessLevel.FRESH,
        ),
        cycles=tuple(cycle(m) for m in markers),
    )


def fruit_tail():
    """Stage-2/3 fakes that deterministically say banana / fresh."""
    stage2 = _ScriptedStage([SpecificLabel.APPLE, SpecificLabel.BANANA], {})
    stage2.predict_proba = lambda X: np.tile([0.1, 0.9], (np.asarray(X).shape[0], 1))
    stage3 = _ScriptedStage(list(FreshnessLevel), {})
    stage3.predict_proba = lambda X: np.tile(
        [0.7, 0.1, 0.1, 0.1], (np.asarray(X).shape[0], 1)
    )
    return (
        {GeneralClass.MEAT: stage2, GeneralClass.FRUIT: stage2},
        {SpecificLabel.APPLE: stage3, SpecificLabel.BANANA: stage3},
    )


class TestSessionVoting:
    def test_majority_wins(self):
        stage1 = _ScriptedStage(
            [GeneralClass.MEAT, GeneralClass.FRUIT],
            {1.0: [0.1, 0.9], 2.0: [0.2, 0.8], 3.0: [0.8, 0.2]},
        )
        stage2_map, stage3_map = fruit_tail()
        model = scripted_model(stage1, stage2_map, stage3_map)
        verdict = predict_session(model, session_with_markers([1.0, 2.0, 3.0]))
        assert verdict.general_class is GeneralClass.FRUIT
        assert len(verdict.cycle_votes) == 3
        assert [v[0] for v in verdict.cycle_votes] == [
            GeneralClass.FRUIT, GeneralClass.FRUIT, GeneralClass.MEAT,
        ]

    def test_tie_broken_by_mean_probability(self):
        stage1 = _ScriptedStage(
            [GeneralClass.MEAT, GeneralClass.FRUIT],
            {1.0: [0.9, 0.1], 2.0: [0.3, 0.7]},
        )
        stage2_map, stage3_map = fruit_tail()
        model = scripted_model(stage1, stage2_map, stage3_map)
        # votes split 2-2; MEAT mean 0.6 vs FRUIT 0.4
        verdict = predict_session(model, session_with_markers([1.0, 1.0, 2.0, 2.0]))
        assert verdict.general_class is GeneralClass.MEAT

    def test_exact_tie_falls_to_lowest_class_index(self):
        stage1 = _ScriptedStage(
            [GeneralClass.MEAT, GeneralClass.FRUIT],
            {1.0: [0.8, 0.2], 2.0: [0.2, 0.8]},
        )
        stage2_map, stage3_map = fruit_tail()
        model = scripted_model(stage1, stage2_map, stage3_map)
        verdict = predict_session(model, session_with_markers([1.0, 2.0]))
        assert verdict.general_class is GeneralClass.MEAT  # taxonomy order

    def test_permutation_stability(self):
        stage1 = _ScriptedStage(
            [GeneralClass.MEAT, GeneralClass.FRUIT],
            {1.0: [0.6, 0.4], 2.0: [0.45, 0.55], 3.0: [0.2, 0.8]},
        )
        stage2_map, stage3_map = fruit_tail()
        model = scripted_model(stage1, stage2_map, stage3_map)
        orders = [[1.0, 2.0, 3.0], [3.0, 1.0, 2.0], [2.0, 3.0, 1.0]]
        verdicts = [predict_session(model, session_with_markers(o)) for o in orders]
        assert len({v.general_class for v in verdicts}) == 1
        assert len({v.specific_label for v in verdicts}) == 1
        assert len({v.freshness for v in verdicts}) == 1

    def test_single_cycle_equals_pointwise_prediction(self):
        sessions = small_corpus(cycles_per_session=1)
        dataset = build_dataset(sessions)
        model = train_multistep(StageAssignment.uniform(LOGREG), dataset, seed=5)
        session = sessions[0]
        by_session = predict_session(model, session)
        by_point = predict_multistep(model, extract_features(session.cycles[0]))
        assert by_session.general_class is by_point.general_class
        assert by_session.specific_label is by_point.specific_label
        assert by_session.freshness is by_point.freshness


class TestFlatBaseline:
    def test_joint_class_count_matches_cells(self):
        cells = cells_for_classes(GeneralClass.MEAT, GeneralClass.DRINK)
        dataset = build_dataset(small_corpus(cells=cells))
        model = train_flat(AlgorithmSpec("tree", "raw"), dataset, seed=2)
        assert len(model.classes_) == len(cells)

    def test_flat_verdict_decodes(self):
        cells = cells_for_classes(GeneralClass.MEAT, GeneralClass.FRUIT)
        dataset = build_dataset(small_corpus(cells=cells, sessions_per_cell=2))
        model = train_flat(AlgorithmSpec("tree", "raw"), dataset, seed=2)
        rows = np.flatnonzero(
            (dataset.label_targets == SpecificLabel.BANANA)
            & (dataset.freshness_targets == FreshnessLevel.ROTTEN)
        )
        verdict = flat_verdict(model, dataset.features[rows[0]])
        assert verdict.specific_label is SpecificLabel.BANANA
        assert verdict.freshness is FreshnessLevel.ROTTEN
        assert verdict.general_class is GeneralClass.FRUIT

    def test_deterministic(self):
        cells = cells_for_classes(GeneralClass.MEAT, GeneralClass.DRINK)
        dataset = build_dataset(small_corpus(cells=cells))
        a = train_flat(AlgorithmSpec("tree", "raw"), dataset, seed=2)
        b = train_flat(AlgorithmSpec("tree", "raw"), dataset, seed=2)
        assert save_model(a) == save_model(b)
