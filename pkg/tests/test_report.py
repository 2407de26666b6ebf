"""Golden checks pinning the text table layout and the JSON row schema."""

import json

import pytest

from enose.classifiers import AlgorithmSpec
from enose.evaluate import cross_validate, run_ablation, select_stage_models
from enose.features import build_dataset
from enose.hierarchy import StageAssignment
from enose.report import (
    SCHEMA,
    _text_table,
    ablation_documents,
    multistep_documents,
    selection_documents,
)
from enose.synth import SynthConfig, cells_for_classes, generate_corpus
from enose.taxonomy import GeneralClass


@pytest.fixture(scope="module")
def tiny_dataset():
    config = SynthConfig(
        seed=5, sessions_per_cell=2, cycles_per_session=2,
        class_separation=12.0, label_separation=3.0, freshness_drift=4.0,
        noise_sigma=0.2, session_jitter=0.1,
        cells=cells_for_classes(GeneralClass.MEAT, GeneralClass.DRINK),
    )
    return build_dataset(generate_corpus(config))


def test_text_table_layout_pinned():
    rows = [
        {"algorithm": "logreg", "stage": "stage1",
         "accuracy": 0.875, "f1": 0.25, "kappa": 1.0, "per_fold": []},
    ]
    table = _text_table(rows)
    lines = table.splitlines()
    assert lines[0] == (
        f"{'algorithm':<24}{'stage':<18}{'accuracy':>10}{'f1-score':>10}{'kappa':>10}"
    )
    assert lines[1] == "-" * len(lines[0])
    assert lines[2] == (
        "logreg                  stage1                0.8750    0.2500    1.0000"
    )


def test_selection_documents_schema(tiny_dataset):
    selection = select_stage_models([AlgorithmSpec("logreg")], tiny_dataset, seed=1)
    text, json_text = selection_documents(selection, seed=1, timestamp=False)
    doc = json.loads(json_text)
    assert doc["schema"] == SCHEMA
    assert doc["kind"] == "model-selection"
    assert doc["seed"] == 1
    assert "generated_at" not in doc
    for row in doc["rows"]:
        assert set(row) == {"algorithm", "stage", "accuracy", "f1", "kappa", "per_fold"}
        for fold in row["per_fold"]:
            assert set(fold) == {"session_id", "accuracy", "f1", "kappa"}
    assert "winners" in doc
    assert text.startswith("# model selection")
    assert "per-fold means" in text


def test_multistep_documents_schema(tiny_dataset):
    report = cross_validate(
        StageAssignment.uniform(AlgorithmSpec("logreg")), tiny_dataset, seed=1
    )
    text, json_text = multistep_documents(report, seed=1, timestamp=False)
    doc = json.loads(json_text)
    assert doc["kind"] == "multistep-cv"
    assert doc["fold_count"] == report.fold_count
    assert [row["stage"] for row in doc["rows"]] == [
        "end-to-end", "stage1", "stage2", "stage3",
    ]


def test_timestamp_toggle(tiny_dataset):
    selection = select_stage_models([AlgorithmSpec("logreg")], tiny_dataset, seed=1)
    text, json_text = selection_documents(selection, seed=1, timestamp=True)
    assert "generated_at" in json.loads(json_text)
    assert text.startswith("# generated: ")


def test_ablation_documents_schema(tiny_dataset):
    report = run_ablation([AlgorithmSpec("logreg")], tiny_dataset, seed=1)
    text, json_text = ablation_documents(report, seed=1, timestamp=False)
    doc = json.loads(json_text)
    assert doc["kind"] == "ablation"
    assert doc["rows"][0]["algorithm"] == "multi-step"
    assert doc["rows"][1]["stage"] == "one-step"
    assert "fold_plan_sha" in doc
