"""Report rendering: aligned text tables and a pinned JSON schema.

Both views carry the same rows: one entry per algorithm and stage with
pooled accuracy, macro F-1 and kappa, plus the per-fold values. Reports
are deterministic; the timestamp header is optional so byte-level
comparisons of repeated runs stay possible.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone

from .evaluate import AblationReport, MultistepCvReport, StageSelection

SCHEMA = "enose.report.v1"


def _timestamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _text_table(rows: list[dict]) -> str:
    header = f"{'algorithm':<24}{'stage':<18}{'accuracy':>10}{'f1-score':>10}{'kappa':>10}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row['algorithm']:<24}{row['stage']:<18}"
            f"{row['accuracy']:>10.4f}{row['f1']:>10.4f}{row['kappa']:>10.4f}"
        )
    return "\n".join(lines)


def _mean_note(rows: list[dict]) -> str:
    notes = []
    for row in rows:
        folds = row.get("per_fold", [])
        if not folds:
            continue
        mean_acc = sum(f["accuracy"] for f in folds) / len(folds)
        mean_f1 = sum(f["f1"] for f in folds) / len(folds)
        mean_kappa = sum(f["kappa"] for f in folds) / len(folds)
        notes.append(
            f"  {row['algorithm']} / {row['stage']}: fold-mean "
            f"accuracy={mean_acc:.4f} f1={mean_f1:.4f} kappa={mean_kappa:.4f}"
        )
    if not notes:
        return ""
    return "\nper-fold means (pooled metrics above are primary):\n" + "\n".join(notes)


def _document(kind: str, seed: int, rows: list[dict], *, extra: dict | None = None,
              timestamp: bool = True) -> dict:
    doc = {"schema": SCHEMA, "kind": kind, "seed": seed, "rows": rows}
    if extra:
        doc.update(extra)
    if timestamp:
        doc["generated_at"] = _timestamp()
    return doc


def render_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _render_text(title: str, rows: list[dict], *, timestamp: bool, footer: str = "") -> str:
    lines = []
    if timestamp:
        lines.append(f"# generated: {_timestamp()}")
    lines.append(f"# {title}")
    lines.append(_text_table(rows))
    means = _mean_note(rows)
    if means:
        lines.append(means)
    if footer:
        lines.append(footer)
    return "\n".join(lines) + "\n"


def selection_documents(selection: StageSelection, seed: int, *, timestamp: bool = True):
    """(text, json) for the per-stage candidate comparison."""
    rows: list[dict] = []
    winners = {"stage1": selection.stage1.winner.token}
    for spec, report in selection.stage1.rows:
        row = report.row()
        row["algorithm"] = spec.token
        row["stage"] = "stage1"
        rows.append(row)
    for general_class, table in sorted(selection.stage2.items()):
        if table.winner is None:
            winners[table.stage] = f"stub:{table.stub.value}"
            continue
        winners[table.stage] = table.winner.token
        for spec, report in table.rows:
            row = report.row()
            row["algorithm"] = spec.token
            row["stage"] = table.stage
            rows.append(row)
    doc = _document(
        "model-selection", seed, rows, extra={"winners": winners}, timestamp=timestamp
    )
    footer = "winners: " + ", ".join(f"{k}={v}" for k, v in sorted(winners.items()))
    text = _render_text("model selection (one row per candidate and stage)", rows,
                        timestamp=timestamp, footer=footer)
    return text, render_json(doc)


def multistep_documents(report: MultistepCvReport, seed: int, *, timestamp: bool = True):
    """(text, json) for one fixed assignment evaluated end to end."""
    rows = report.rows()
    doc = _document("multistep-cv", seed, rows, timestamp=timestamp,
                    extra={"fold_count": report.fold_count})
    text = _render_text(
        "multi-step cross-validation (end-to-end = label and freshness both correct)",
        rows, timestamp=timestamp,
    )
    return text, render_json(doc)


def ablation_documents(report: AblationReport, seed: int, *, timestamp: bool = True):
    """(text, json) for multi-step vs the one-step baselines."""
    rows = report.rows()
    extra = {
        "fold_plan_sha": _plan_sha(report.plan_fingerprint),
        "winners": {"stage1": report.selection.stage1.winner.token},
    }
    doc = _document("ablation", seed, rows, extra=extra, timestamp=timestamp)
    text = _render_text(
        "ablation: multi-step vs one-step joint classification", rows,
        timestamp=timestamp,
    )
    return text, render_json(doc)


def _plan_sha(fingerprint: str) -> str:
    import hashlib

    return hashlib.sha256(fingerprint.encode("utf-8")).hexdigest()
