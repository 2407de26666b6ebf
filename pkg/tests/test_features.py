"""Feature layout, the grid bijection, and dataset assembly."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from enose.errors import DimensionMismatch, EmptyCorpus
from enose.features import (
    N_FEATURES,
    build_dataset,
    extract_features,
    feature_index,
    flatten_grid,
    reshape_to_grid,
)
from enose.session import Annotation, MeasurementSession, ScanCycle, StepReading
from enose.taxonomy import FreshnessLevel, GeneralClass, SpecificLabel


def cycle_from_grid(grid):
    return ScanCycle(
        steps=tuple(
            StepReading(
                step_index=s,
                temperature_c=float(grid[0][s]),
                pressure_hpa=float(grid[1][s]),
                humidity_pct=float(grid[2][s]),
                resistance_ohm=float(grid[3][s]),
            )
            for s in range(10)
        )
    )


def simple_cycle(temperature=None):
    grid = np.ones((4, 10))
    grid[0] = temperature if temperature is not None else np.zeros(10)
    grid[1] = 1000.0
    grid[2] = 50.0
    grid[3] = 1e5
    return cycle_from_grid(grid)


def session_of(session_id, n_cycles, label=SpecificLabel.PORK,
               freshness=FreshnessLevel.FRESH):
    return MeasurementSession(
        session_id=session_id,
        annotation=Annotation(
            general_class=label.general_class, label=label, freshness=freshness
        ),
        cycles=tuple(simple_cycle(np.arange(10) + i) for i in range(n_cycles)),
    )


class TestLayout:
    def test_temperature_occupies_first_block(self):
        cycle = simple_cycle(temperature=np.arange(10.0))
        vector = extract_features(cycle)
        assert np.array_equal(vector[:10], np.arange(10.0))
        assert len(vector) == N_FEATURES

    def test_index_formula(self):
        cycle = simple_cycle()
        vector = extract_features(cycle)
        assert vector[feature_index(3, 7)] == 1e5
        assert vector[feature_index(2, 0)] == 50.0

    def test_single_step_changes_single_index(self):
        grid = np.ones((4, 10))
        grid[1] = 1000.0
        grid[2] = 50.0
        grid[3] = 1e5
        a = extract_features(cycle_from_grid(grid))
        grid2 = grid.copy()
        grid2[3][7] += 123.0
        b = extract_features(cycle_from_grid(grid2))
        changed = np.flatnonzero(a != b)
        assert changed.tolist() == [feature_index(3, 7)]

    @given(st.integers(0, 3), st.integers(0, 9))
    def test_index_bijection(self, channel, step):
        index = feature_index(channel, step)
        assert 0 <= index < 40
        assert (index // 10, index % 10) == (channel, step)

    def test_all_indices_distinct(self):
        indices = {feature_index(c, s) for c in range(4) for s in range(10)}
        assert indices == set(range(40))


class TestGrid:
    def test_reshape_rows(self):
        vector = np.arange(40.0)
        grid = reshape_to_grid(vector)
        assert np.array_equal(grid[0], np.arange(10.0))
        assert np.array_equal(grid[3], np.arange(30.0, 40.0))

    def test_round_trip(self, rng):
        vector = rng.normal(size=40)
        assert np.array_equal(flatten_grid(reshape_to_grid(vector)), vector)

    def test_wrong_length(self):
        with pytest.raises(DimensionMismatch):
            reshape_to_grid(np.zeros(41))

    def test_wrong_grid_shape(self):
        with pytest.raises(DimensionMismatch):
            flatten_grid(np.zeros((5, 8)))


class TestDataset:
    def test_row_count_is_cycle_sum(self):
        dataset = build_dataset([session_of("a", 3), session_of("b", 5)])
        assert dataset.n_rows == 8

    def test_single_session_single_cycle(self):
        dataset = build_dataset([session_of("only", 1)])
        assert dataset.n_rows == 1
        assert dataset.session_ids[0] == "only"

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            build_dataset([])

    def test_provenance(self):
        sessions = [session_of("a", 2), session_of("b", 4)]
        dataset = build_dataset(sessions)
        known = {s.session_id for s in sessions}
        assert set(dataset.session_ids) <= known

    def test_targets_track_annotation(self):
        dataset = build_dataset(
            [session_of("x", 2, label=SpecificLabel.BANANA, freshness=FreshnessLevel.ROTTEN)]
        )
        assert all(c is GeneralClass.FRUIT for c in dataset.class_targets)
        assert all(f is FreshnessLevel.ROTTEN for f in dataset.freshness_targets)

    def test_arrays_read_only(self):
        dataset = build_dataset([session_of("a", 2)])
        with pytest.raises(ValueError):
            dataset.features[0, 0] = 1.0

    def test_subset_keeps_alignment(self):
        dataset = build_dataset([session_of("a", 3), session_of("b", 3)])
        sub = dataset.subset(np.flatnonzero(dataset.session_ids == "b"))
        assert sub.n_rows == 3
        assert set(sub.session_ids) == {"b"}

    def test_joint_targets_encode_pairs(self):
        dataset = build_dataset(
            [session_of("x", 1, label=SpecificLabel.BANANA, freshness=FreshnessLevel.ROTTEN)]
        )
        from enose.hierarchy import decode_joint

        label, fresh = decode_joint(dataset.targets("joint")[0])
        assert label is SpecificLabel.BANANA
        assert fresh is FreshnessLevel.ROTTEN
