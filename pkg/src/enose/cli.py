"""Command-line front end: synthesis, ingestion, training, evaluation.

Exit codes are part of the contract so shell harnesses can distinguish
failures: 0 success, 2 input or schema problem, 3 model/bundle problem,
4 invariant violation during fitting or evaluation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import warnings
from pathlib import Path

from . import errors
from .classifiers import ALGORITHMS, AlgorithmSpec, parse_spec_token
from .evaluate import cross_validate, run_ablation, select_stage_models
from .features import build_dataset
from .hierarchy import StageAssignment, load_bundle, predict_session, save_bundle, train_multistep
from .preprocess import ProjectionPipeline, projection_scatter_rows, render_scatter_csv
from .report import ablation_documents, multistep_documents, selection_documents
from .session import (
    Annotation,
    RawImportConfig,
    import_raw_export,
    load_corpus,
    save_corpus,
)
from .synth import PRESETS, generate_corpus, preset_config, separability_report
from .taxonomy import parse_freshness, parse_general_class, parse_specific_label

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_MODEL = 3
EXIT_INVARIANT = 4

_INPUT_ERRORS = (
    errors.SchemaError,
    errors.RangeError,
    errors.DuplicateSessionId,
    errors.UnknownLabel,
    errors.EmptyCorpus,
    errors.InvalidConfig,
    errors.InvalidHyperparameter,
    errors.LengthMismatch,
    errors.TooFewSessions,
    FileNotFoundError,
    IsADirectoryError,
)
_MODEL_ERRORS = (errors.CorruptModel, errors.VersionMismatch, errors.MissingBranch)
_INVARIANT_ERRORS = (
    errors.DegenerateData,
    errors.SingularScatter,
    errors.BetweenScatterZero,
    errors.SingleClassData,
    errors.InsufficientClasses,
    errors.DimensionMismatch,
)


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, staging = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(handle, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(staging, path)
    except BaseException:
        os.unlink(staging)
        raise


def _parse_candidates(text: str) -> list[AlgorithmSpec]:
    if text.strip() == "all":
        return [AlgorithmSpec(name) for name in ALGORITHMS]
    specs = [parse_spec_token(token) for token in text.split(",") if token.strip()]
    if not specs:
        raise errors.InvalidHyperparameter("empty candidate list")
    return specs


def _parse_assignment(args) -> StageAssignment:
    stage1 = parse_spec_token(args.stage1)
    stage2 = {}
    for item in args.stage2 or []:
        name, _, token = item.partition("=")
        if not token:
            raise errors.InvalidHyperparameter(
                f"--stage2 expects class=algorithm, got {item!r}"
            )
        stage2[parse_general_class(name)] = parse_spec_token(token)
    return StageAssignment(stage1=stage1, stage2=stage2)


def _emit_reports(out_dir, stem: str, text: str, json_text: str, display: str) -> None:
    if out_dir:
        out = Path(out_dir)
        _write_atomic(out / f"{stem}.txt", text)
        _write_atomic(out / f"{stem}.json", json_text)
    sys.stdout.write(display)


def cmd_synth(args) -> int:
    overrides = {}
    if args.sessions_per_cell is not None:
        overrides["sessions_per_cell"] = args.sessions_per_cell
    if args.cycles is not None:
        overrides["cycles_per_session"] = args.cycles
    config = preset_config(args.preset, seed=args.seed, **overrides)
    sessions = generate_corpus(config)
    save_corpus(sessions, args.out)
    rows = sum(s.k for s in sessions)
    stage1_ratio = separability_report(sessions).stage1
    print(
        f"wrote {len(sessions)} sessions ({rows} rows) to {args.out}; "
        f"stage-1 separation ratio {stage1_ratio:.2f}"
    )
    return EXIT_OK


def cmd_ingest(args) -> int:
    raw = Path(args.input).read_bytes()
    annotation = Annotation(
        general_class=parse_general_class(args.general_class),
        label=parse_specific_label(args.label),
        freshness=parse_freshness(args.freshness),
    )
    config = RawImportConfig()
    if args.field_map:
        try:
            mapping = json.loads(Path(args.field_map).read_text(encoding="utf-8"))
            config = RawImportConfig(**mapping)
        except (json.JSONDecodeError, TypeError) as exc:
            raise errors.SchemaError(f"bad field map {args.field_map}: {exc}") from exc
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        session = import_raw_export(
            raw,
            session_id=args.session_id or Path(args.input).stem,
            annotation=annotation,
            config=config,
        )
    save_corpus([session], args.out)
    for warning in caught:
        print(f"warning: {warning.message}", file=sys.stderr)
    print(
        f"imported 1 session ({session.k} cycles) from {args.input} to {args.out}; "
        f"{len(caught)} warning(s)"
    )
    return EXIT_OK


def cmd_train(args) -> int:
    dataset = build_dataset(load_corpus(args.corpus))
    assignment = _parse_assignment(args)
    model = train_multistep(assignment, dataset, args.seed)
    save_bundle(model, args.out)
    stubs2 = sorted(model.stubs.get("stage2", {}))
    stubs3 = sorted(model.stubs.get("stage3", {}))
    print(
        f"trained cascade on {dataset.n_rows} rows: stage1={assignment.stage1.token}, "
        f"{len(model.stage2)} stage-2 branch(es), {len(model.stage3)} freshness net(s); "
        f"stubs: stage2={stubs2 or 'none'}, stage3={stubs3 or 'none'}; bundle at {args.out}"
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    dataset = build_dataset(load_corpus(args.corpus))
    timestamp = not args.no_timestamp
    if args.multistep:
        assignment = _parse_assignment(args)
        report = cross_validate(assignment, dataset, args.seed, jobs=args.jobs)
        text, json_text = multistep_documents(report, args.seed, timestamp=timestamp)
    else:
        selection = select_stage_models(
            _parse_candidates(args.candidates), dataset, args.seed, jobs=args.jobs
        )
        text, json_text = selection_documents(selection, args.seed, timestamp=timestamp)
    _emit_reports(args.out, "report", text, json_text,
                  json_text if args.format == "json" else text)
    return EXIT_OK


def cmd_ablate(args) -> int:
    dataset = build_dataset(load_corpus(args.corpus))
    report = run_ablation(
        _parse_candidates(args.candidates), dataset, args.seed, jobs=args.jobs
    )
    text, json_text = ablation_documents(report, args.seed, timestamp=not args.no_timestamp)
    _emit_reports(args.out, "ablation", text, json_text,
                  json_text if args.format == "json" else text)
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_bundle(args.model)
    sessions = load_corpus(args.corpus)
    results = []
    for session in sessions:
        verdict = predict_session(model, session)
        truth = session.annotation
        correct = (
            verdict.specific_label is truth.label and verdict.freshness is truth.freshness
        )
        results.append((session, verdict, correct))
    if args.format == "json":
        doc = [
            {
                "session_id": session.session_id,
                "predicted": {
                    "class": verdict.general_class.value,
                    "label": verdict.specific_label.value,
                    "freshness": verdict.freshness.value,
                },
                "truth": {
                    "class": session.annotation.general_class.value,
                    "label": session.annotation.label.value,
                    "freshness": session.annotation.freshness.value,
                },
                "correct": correct,
            }
            for session, verdict, correct in results
        ]
        sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        for session, verdict, correct in results:
            mark = "ok" if correct else "MISS"
            print(
                f"{session.session_id}: {verdict.general_class.value}/"
                f"{verdict.specific_label.value}/{verdict.freshness.value} "
                f"(truth {session.annotation.label.value}/"
                f"{session.annotation.freshness.value}) [{mark}]"
            )
        hits = sum(1 for *_, correct in results if correct)
        print(f"{hits}/{len(results)} sessions fully correct")
    return EXIT_OK


def cmd_project(args) -> int:
    dataset = build_dataset(load_corpus(args.corpus))
    stage = args.stage.strip()
    if stage == "1":
        X, y = dataset.features, dataset.class_targets
    elif stage.startswith("2:"):
        general_class = parse_general_class(stage[2:])
        rows = dataset.class_targets == general_class
        sub = dataset.subset([i for i, keep in enumerate(rows) if keep])
        X, y = sub.features, sub.label_targets
    else:
        raise errors.InvalidHyperparameter(
            f"--stage must be '1' or '2:<class>', got {args.stage!r}"
        )
    pipeline = ProjectionPipeline(pca_components=args.pca).fit(X, y)
    rows = projection_scatter_rows(pipeline, X, y)
    _write_atomic(Path(args.out), render_scatter_csv(rows, pipeline.n_components_))
    print(f"wrote {len(rows)} projected rows ({pipeline.n_components_} dims) to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="enose",
        description="Food type and freshness detection from gas-sensor scan cycles.",
        epilog="exit codes: 0 ok, 2 input/schema error, 3 model/bundle error, "
               "4 invariant violation during fitting or evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--preset", choices=sorted(PRESETS), default="hier")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sessions-per-cell", type=int, default=None)
    p.add_argument("--cycles", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="convert a raw analyzer export to the corpus format")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--class", dest="general_class", required=True)
    p.add_argument("--label", required=True)
    p.add_argument("--freshness", required=True)
    p.add_argument("--session-id", default=None)
    p.add_argument("--field-map", default=None,
                   help="JSON file overriding the raw field name mapping")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train the cascade and write a model bundle")
    p.add_argument("--corpus", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stage1", default="logreg")
    p.add_argument("--stage2", action="append", metavar="CLASS=ALG",
                   help="per-class stage-2 override, e.g. meat=forest")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="cross-validate candidates or one assignment")
    p.add_argument("--corpus", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--candidates", default="all",
                   help="'all' or comma-separated algorithm tokens")
    p.add_argument("--multistep", action="store_true",
                   help="evaluate one fixed assignment end to end instead")
    p.add_argument("--stage1", default="logreg")
    p.add_argument("--stage2", action="append", metavar="CLASS=ALG")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-timestamp", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="multi-step vs one-step comparison")
    p.add_argument("--corpus", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--candidates", default="all")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-timestamp", action="store_true")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("predict", help="predict sessions with a trained bundle")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("project", help="export reduced coordinates for plotting")
    p.add_argument("--corpus", required=True)
    p.add_argument("--stage", required=True, help="'1' or '2:<class>'")
    p.add_argument("--out", required=True)
    p.add_argument("--pca", type=float, default=0.95)
    p.set_defaults(func=cmd_project)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _MODEL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except _INVARIANT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
