"""Measurement sessions: data model, corpus file parsing, raw-export import.

A measurement session is one continuous detection of a specimen: ``k``
scan cycles, each cycle ten heater-step readings of temperature,
pressure, humidity and gas resistance. Sessions are immutable after
construction and safe to share between threads.

The canonical corpus file is a UTF-8 JSON array of session objects::

    [
      {
        "session_id": "pork-fresh-000",
        "class": "meat",
        "label": "pork",
        "freshness": "fresh",
        "cycles": [
          {"steps": [{"t_deg_c": 21.4, "p_hpa": 1007.2,
                      "rh_pct": 48.1, "r_ohm": 118402.0}, ...10 total]},
          ...
        ]
      },
      ...
    ]

Strings are matched against the taxonomy case-insensitively. Unknown
keys are rejected rather than silently dropped.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

from .errors import DuplicateSessionId, RangeError, SchemaError
from .taxonomy import (
    FreshnessLevel,
    GeneralClass,
    SpecificLabel,
    parse_freshness,
    parse_general_class,
    parse_specific_label,
)

STEPS_PER_CYCLE = 10

_STEP_KEYS = ("t_deg_c", "p_hpa", "rh_pct", "r_ohm")
_SESSION_KEYS = ("session_id", "class", "label", "freshness", "cycles")


@dataclass(frozen=True)
class StepReading:
    """One heater step: the four contributory channels plus its position."""

    step_index: int
    temperature_c: float
    pressure_hpa: float
    humidity_pct: float
    resistance_ohm: float

    def __post_init__(self):
        for name in ("temperature_c", "pressure_hpa", "humidity_pct", "resistance_ohm"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise SchemaError(f"{name} must be a number, got {value!r}")
            if not math.isfinite(value):
                raise RangeError(f"{name} must be finite, got {value!r}")
        if not 0.0 <= self.humidity_pct <= 100.0:
            raise RangeError(f"humidity {self.humidity_pct!r} outside [0, 100]")
        if self.resistance_ohm <= 0.0:
            raise RangeError(f"resistance {self.resistance_ohm!r} must be positive")
        if self.pressure_hpa <= 0.0:
            raise RangeError(f"pressure {self.pressure_hpa!r} must be positive")


@dataclass(frozen=True)
class ScanCycle:
    """Exactly ten steps with strictly increasing step indices."""

    steps: tuple[StepReading, ...]

    def __post_init__(self):
        if len(self.steps) != STEPS_PER_CYCLE:
            raise SchemaError(
                f"a scan cycle needs exactly {STEPS_PER_CYCLE} steps, got {len(self.steps)}"
            )
        indices = [s.step_index for s in self.steps]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise SchemaError(f"step indices must strictly increase, got {indices}")


@dataclass(frozen=True)
class Annotation:
    """Ground truth attached to a session: class, label, freshness."""

    general_class: GeneralClass
    label: SpecificLabel
    freshness: FreshnessLevel

    def __post_init__(self):
        if self.label.general_class is not self.general_class:
            raise SchemaError(
                f"label {self.label.value!r} belongs to class "
                f"{self.label.general_class.value!r}, not {self.general_class.value!r}"
            )


@dataclass(frozen=True)
class MeasurementSession:
    """One detection run: k >= 1 cycles of an annotated specimen."""

    session_id: str
    annotation: Annotation
    cycles: tuple[ScanCycle, ...] = field(repr=False)

    def __post_init__(self):
        if not isinstance(self.session_id, str) or not self.session_id:
            raise SchemaError(f"session_id must be a nonempty string, got {self.session_id!r}")
        if len(self.cycles) < 1:
            raise SchemaError(f"session {self.session_id!r} has no cycles")

    @property
    def k(self) -> int:
        return len(self.cycles)


# -- canonical corpus format ------------------------------------------------

def _require_number(value, context: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{context}: expected a number, got {value!r}")
    return float(value)


def _parse_cycle(obj, context: str) -> ScanCycle:
    if not isinstance(obj, dict):
        raise SchemaError(f"{context}: cycle must be an object")
    extra = set(obj) - {"steps"}
    if extra:
        raise SchemaError(f"{context}: unknown cycle keys {sorted(extra)}")
    steps_raw = obj.get("steps")
    if not isinstance(steps_raw, list):
        raise SchemaError(f"{context}: missing 'steps' array")
    if len(steps_raw) != STEPS_PER_CYCLE:
        raise SchemaError(
            f"{context}: expected {STEPS_PER_CYCLE} steps, got {len(steps_raw)}"
        )
    steps = []
    for i, step in enumerate(steps_raw):
        where = f"{context}, step {i}"
        if not isinstance(step, dict):
            raise SchemaError(f"{where}: step must be an object")
        extra = set(step) - set(_STEP_KEYS)
        if extra:
            raise SchemaError(f"{where}: unknown step keys {sorted(extra)}")
        missing = set(_STEP_KEYS) - set(step)
        if missing:
            raise SchemaError(f"{where}: missing keys {sorted(missing)}")
        steps.append(
            StepReading(
                step_index=i,
                temperature_c=_require_number(step["t_deg_c"], where),
                pressure_hpa=_require_number(step["p_hpa"], where),
                humidity_pct=_require_number(step["rh_pct"], where),
                resistance_ohm=_require_number(step["r_ohm"], where),
            )
        )
    return ScanCycle(steps=tuple(steps))


def _parse_session(obj, position: int) -> MeasurementSession:
    context = f"session #{position}"
    if not isinstance(obj, dict):
        raise SchemaError(f"{context}: session must be an object")
    extra = set(obj) - set(_SESSION_KEYS)
    if extra:
        raise SchemaError(f"{context}: unknown session keys {sorted(extra)}")
    missing = set(_SESSION_KEYS) - set(obj)
    if missing:
        raise SchemaError(f"{context}: missing keys {sorted(missing)}")
    session_id = obj["session_id"]
    if not isinstance(session_id, str) or not session_id:
        raise SchemaError(f"{context}: session_id must be a nonempty string")
    context = f"session {session_id!r}"
    annotation = Annotation(
        general_class=parse_general_class(obj["class"]),
        label=parse_specific_label(obj["label"]),
        freshness=parse_freshness(obj["freshness"]),
    )
    cycles_raw = obj["cycles"]
    if not isinstance(cycles_raw, list) or not cycles_raw:
        raise SchemaError(f"{context}: 'cycles' must be a nonempty array")
    cycles = tuple(
        _parse_cycle(c, f"{context}, cycle {i}") for i, c in enumerate(cycles_raw)
    )
    return MeasurementSession(session_id=session_id, annotation=annotation, cycles=cycles)


def parse_session_log(data: bytes | str) -> list[MeasurementSession]:
    """Parse a canonical corpus document into validated sessions.

    Raises SchemaError / RangeError / DuplicateSessionId on the first
    malformed record; nothing is ever silently dropped.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError(f"corpus is not valid UTF-8: {exc}") from exc
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"corpus is not valid JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise SchemaError("corpus must be a top-level JSON array of sessions")
    sessions: list[MeasurementSession] = []
    seen: set[str] = set()
    for i, obj in enumerate(doc):
        session = _parse_session(obj, i)
        if session.session_id in seen:
            raise DuplicateSessionId(f"session_id {session.session_id!r} appears twice")
        seen.add(session.session_id)
        sessions.append(session)
    return sessions


def session_to_dict(session: MeasurementSession) -> dict:
    return {
        "session_id": session.session_id,
        "class": session.annotation.general_class.value,
        "label": session.annotation.label.value,
        "freshness": session.annotation.freshness.value,
        "cycles": [
            {
                "steps": [
                    {
                        "t_deg_c": step.temperature_c,
                        "p_hpa": step.pressure_hpa,
                        "rh_pct": step.humidity_pct,
                        "r_ohm": step.resistance_ohm,
                    }
                    for step in cycle.steps
                ]
            }
            for cycle in session.cycles
        ],
    }


def serialize_sessions(sessions: list[MeasurementSession]) -> str:
    """Render sessions in the canonical corpus format (deterministic bytes)."""
    return json.dumps(
        [session_to_dict(s) for s in sessions],
        sort_keys=True,
        separators=(",", ":"),
    )


def load_corpus(path) -> list[MeasurementSession]:
    with open(path, "rb") as fh:
        return parse_session_log(fh.read())


def save_corpus(sessions: list[MeasurementSession], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_sessions(sessions))


# -- best-effort import of raw analyzer exports -------------------------------

@dataclass(frozen=True)
class RawImportConfig:
    """Field mapping for raw sensor exports.

    Vendors do not publish a stable schema for exported logs, so every
    name here is configurable. Defaults cover common export dialects;
    adjust them to your export rather than editing the importer.
    """

    temperature: str = "temperature"
    pressure: str = "pressure"
    humidity: str = "relative_humidity"
    gas_resistance: str = "resistance_gassensor"
    step_index: str = "heater_profile_step_index"
    columns_key: str = "dataColumns"
    block_key: str = "dataBlock"
    steps_per_cycle: int = STEPS_PER_CYCLE

    def channel_fields(self) -> tuple[str, str, str, str]:
        return (self.temperature, self.pressure, self.humidity, self.gas_resistance)


def _records_from_raw(doc, config: RawImportConfig) -> list[dict]:
    """Flatten either a columnar export or a plain record list."""
    if isinstance(doc, dict) and config.block_key in doc:
        columns = doc.get(config.columns_key)
        block = doc[config.block_key]
        if not isinstance(columns, list) or not isinstance(block, list):
            raise SchemaError("columnar export needs both column list and data block")
        names = []
        for col in columns:
            if isinstance(col, dict):
                names.append(col.get("id") or col.get("name"))
            else:
                names.append(col)
        records = []
        for row in block:
            if not isinstance(row, list) or len(row) != len(names):
                raise SchemaError("data block row width does not match column list")
            records.append(dict(zip(names, row)))
        return records
    if isinstance(doc, dict) and isinstance(doc.get("data"), list):
        return doc["data"]
    if isinstance(doc, list):
        return doc
    raise SchemaError("unrecognized raw export layout")


def import_raw_export(
    data: bytes | str,
    *,
    session_id: str,
    annotation: Annotation,
    config: RawImportConfig = RawImportConfig(),
) -> MeasurementSession:
    """Convert a raw analyzer export into one canonical session.

    Best effort: unknown fields are reported once via a warning, a
    trailing partial cycle is dropped with a warning. Raw exports carry
    no specimen annotation, so the caller supplies it.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"raw export is not valid JSON: {exc}") from exc
    records = _records_from_raw(doc, config)
    if not records:
        raise SchemaError("raw export contains no data points")

    wanted = set(config.channel_fields()) | {config.step_index}
    unknown = sorted({k for r in records if isinstance(r, dict) for k in r} - wanted)
    if unknown:
        warnings.warn(
            f"ignoring {len(unknown)} unmapped field(s) in raw export: {unknown}",
            stacklevel=2,
        )

    points = []
    for i, rec in enumerate(records):
        if not isinstance(rec, dict):
            raise SchemaError(f"data point #{i} is not an object")
        try:
            values = [float(rec[f]) for f in config.channel_fields()]
        except KeyError as exc:
            raise SchemaError(
                f"data point #{i} lacks mapped field {exc.args[0]!r}; "
                "adjust RawImportConfig to this export"
            ) from None
        points.append(values)

    n = config.steps_per_cycle
    if len(points) % n:
        warnings.warn(
            f"dropping trailing partial cycle of {len(points) % n} point(s)",
            stacklevel=2,
        )
        points = points[: len(points) - (len(points) % n)]
    if not points:
        raise SchemaError("raw export has fewer points than one full cycle")

    cycles = []
    for start in range(0, len(points), n):
        steps = tuple(
            StepReading(
                step_index=s,
                temperature_c=points[start + s][0],
                pressure_hpa=points[start + s][1],
                humidity_pct=points[start + s][2],
                resistance_ohm=points[start + s][3],
            )
            for s in range(n)
        )
        cycles.append(ScanCycle(steps=steps))
    return MeasurementSession(
        session_id=session_id, annotation=annotation, cycles=tuple(cycles)
    )
