"""Seeded synthetic corpora with controllable class/label/freshness structure.

Each (label, freshness) cell owns a 40-value mean signature built from
a shared channel baseline plus a class offset, a smaller label offset,
and a monotone freshness drift on the resistance channel. Sessions draw
one latent offset around their cell signature and cycles add
independent noise on top, so leave-one-session-out validation is
genuinely harder than shuffled row validation. Identical seeds give
byte-identical corpora.

This is a verification substrate, not a physical gas-sensor model.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidConfig
from .features import Dataset, N_CHANNELS, N_STEPS, build_dataset
from .preprocess import normalize_rows
from .session import Annotation, MeasurementSession, ScanCycle, StepReading
from .seeding import derive_seed
from .taxonomy import FreshnessLevel, GeneralClass, SpecificLabel, labels_for

# additive scale of one separation unit, per channel; the resistance
# channel lives in log space, so its unit is a relative change
_CHANNEL_UNITS = np.array([6.0, 2.0, 5.0, 0.05]).reshape(N_CHANNELS, 1)

# sampling bounds per channel (resistance is unbounded in log space)
_CHANNEL_LOW = np.array([-np.inf, 1e-3, 0.0, -np.inf]).reshape(N_CHANNELS, 1)
_CHANNEL_HIGH = np.array([np.inf, np.inf, 100.0, np.inf]).reshape(N_CHANNELS, 1)

# keep signatures away from the hard bounds so sampling rarely rejects
_SIGNATURE_LOW = np.array([-np.inf, 200.0, 5.0, -np.inf]).reshape(N_CHANNELS, 1)
_SIGNATURE_HIGH = np.array([np.inf, np.inf, 95.0, np.inf]).reshape(N_CHANNELS, 1)

_RESISTANCE = 3  # channel row that carries the freshness drift

# session-to-session drift lives on the gas baseline; the climate
# channels wander far less between sessions than within a cycle
_JITTER_WEIGHTS = np.array([0.05, 0.05, 0.05, 1.0]).reshape(N_CHANNELS, 1)


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for one synthetic corpus.

    Separations and sigmas are in per-channel units, so 1.0 means a
    typical offset of one unit on every channel. ``cells`` restricts the
    corpus to chosen (label, freshness) pairs; None means the full
    14 x 4 grid.
    """

    seed: int = 0
    sessions_per_cell: int = 3
    cycles_per_session: int = 5
    class_separation: float = 6.0
    label_separation: float = 2.0
    freshness_drift: float = 1.5
    noise_sigma: float = 0.3
    session_jitter: float = 0.6
    temperature_range: tuple[float, float] = (160.0, 320.0)
    pressure_base: float = 1007.0
    humidity_base: float = 45.0
    resistance_range: tuple[float, float] = (80000.0, 160000.0)
    cells: tuple = field(default=None)

    def __post_init__(self):
        if self.sessions_per_cell < 1 or self.cycles_per_session < 1:
            raise InvalidConfig("need at least one session per cell and one cycle per session")
        if self.noise_sigma < 0 or self.session_jitter < 0:
            raise InvalidConfig("noise and jitter must be nonnegative")
        if not 0 <= self.label_separation < self.class_separation:
            raise InvalidConfig(
                "label separation must stay below class separation so the "
                "hierarchy exists by construction"
            )
        if self.freshness_drift < 0:
            raise InvalidConfig("freshness drift must be nonnegative")
        if not 0.0 <= self.humidity_base <= 100.0:
            raise InvalidConfig("humidity baseline must lie in [0, 100]")
        if self.resistance_range[0] <= 0 or self.resistance_range[0] >= self.resistance_range[1]:
            raise InvalidConfig("resistance range must be positive and increasing")
        if self.temperature_range[0] >= self.temperature_range[1]:
            raise InvalidConfig("temperature range must be increasing")
        if self.cells is not None:
            cells = tuple((lab, fresh) for lab, fresh in self.cells)
            if not cells:
                raise InvalidConfig("cells must be nonempty when given")
            if len(set(cells)) != len(cells):
                raise InvalidConfig("cells must not repeat")
            for lab, fresh in cells:
                if not isinstance(lab, SpecificLabel) or not isinstance(fresh, FreshnessLevel):
                    raise InvalidConfig(f"bad cell ({lab!r}, {fresh!r})")
            object.__setattr__(self, "cells", cells)

    def all_cells(self) -> tuple:
        if self.cells is not None:
            return self.cells
        return tuple(
            (label, fresh) for label in SpecificLabel for fresh in FreshnessLevel
        )


def _unit_pattern(rng: np.random.Generator, shape) -> np.ndarray:
    pattern = rng.normal(size=shape)
    norm = np.linalg.norm(pattern)
    return pattern * (np.sqrt(pattern.size) / norm)


class SignatureTable:
    """Per-(label, freshness) mean grids, a pure function of the seed.

    The grid holds log resistance on its last row; it is exponentiated
    only when cycles are emitted. That keeps resistance strictly
    positive with multiplicative class/label/freshness structure, the
    way a chemiresistive channel behaves.
    """

    def __init__(self, config: SynthConfig):
        self.config = config
        rng = np.random.default_rng(derive_seed(config.seed, "signatures"))
        t_lo, t_hi = config.temperature_range
        r_lo, r_hi = config.resistance_range
        baseline = np.empty((N_CHANNELS, N_STEPS))
        baseline[0] = np.linspace(t_lo, t_hi, N_STEPS)  # heater ramp flavor
        baseline[1] = config.pressure_base + 0.5 * rng.normal(size=N_STEPS)
        baseline[2] = config.humidity_base + 1.0 * rng.normal(size=N_STEPS)
        baseline[3] = np.log(np.linspace(r_hi, r_lo, N_STEPS)) + 0.02 * rng.normal(size=N_STEPS)
        self.baseline = baseline

        # patterns are drawn for the full taxonomy in a fixed order, so a
        # cells subset never changes the signatures of the cells it keeps
        self.class_patterns = {c: _unit_pattern(rng, (N_CHANNELS, N_STEPS)) for c in GeneralClass}
        self.label_patterns = {
            label: _unit_pattern(rng, (N_CHANNELS, N_STEPS)) for label in SpecificLabel
        }
        # rot suppresses resistance across every heater step (uniform
        # multiplicative part) with a per-label step shape on top
        self.drift_patterns = {
            label: -(0.7 + 0.5 * np.abs(_unit_pattern(rng, N_STEPS)))
            for label in SpecificLabel
        }

    def mean_grid(self, label: SpecificLabel, freshness: FreshnessLevel) -> np.ndarray:
        config = self.config
        grid = self.baseline.copy()
        grid += config.class_separation * _CHANNEL_UNITS * self.class_patterns[label.general_class]
        grid += config.label_separation * _CHANNEL_UNITS * self.label_patterns[label]
        drift = config.freshness_drift * float(_CHANNEL_UNITS[_RESISTANCE, 0])
        grid[_RESISTANCE] += drift * (freshness.rank / 3.0) * self.drift_patterns[label]
        return np.clip(grid, _SIGNATURE_LOW, _SIGNATURE_HIGH)


def _sample_bounded(rng: np.random.Generator, center: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Gaussian sample; out-of-bounds entries are redrawn, then clipped."""
    values = center + sigma * rng.normal(size=center.shape)
    for _ in range(100):
        bad = (values < _CHANNEL_LOW) | (values > _CHANNEL_HIGH)
        if not bad.any():
            return values
        redraw = center + sigma * rng.normal(size=center.shape)
        values = np.where(bad, redraw, values)
    return np.clip(values, _CHANNEL_LOW, _CHANNEL_HIGH)


def _grid_to_cycle(grid: np.ndarray) -> ScanCycle:
    return ScanCycle(
        steps=tuple(
            StepReading(
                step_index=s,
                temperature_c=float(grid[0, s]),
                pressure_hpa=float(grid[1, s]),
                humidity_pct=float(grid[2, s]),
                resistance_ohm=float(np.exp(grid[3, s])),
            )
            for s in range(N_STEPS)
        )
    )


def generate_corpus(config: SynthConfig) -> list[MeasurementSession]:
    """All sessions of the configured cells, deterministic in the seed."""
    table = SignatureTable(config)
    noise = config.noise_sigma * _CHANNEL_UNITS
    jitter = config.session_jitter * _CHANNEL_UNITS * _JITTER_WEIGHTS
    sessions = []
    for label, freshness in config.all_cells():
        signature = table.mean_grid(label, freshness)
        for i in range(config.sessions_per_cell):
            rng = np.random.default_rng(
                derive_seed(config.seed, "session", label.value, freshness.value, i)
            )
            center = signature + jitter * rng.normal(size=signature.shape)
            center = np.clip(center, _SIGNATURE_LOW, _SIGNATURE_HIGH)
            cycles = tuple(
                _grid_to_cycle(_sample_bounded(rng, center, noise))
                for _ in range(config.cycles_per_session)
            )
            sessions.append(
                MeasurementSession(
                    session_id=f"{label.value}-{freshness.value}-{i:03d}",
                    annotation=Annotation(
                        general_class=label.general_class, label=label, freshness=freshness
                    ),
                    cycles=cycles,
                )
            )
    return sessions


# -- separability certification ------------------------------------------------

def _fisher_trace_ratio(X: np.ndarray, groups: np.ndarray) -> float:
    """Trace of between-group over trace of within-group scatter."""
    overall = X.mean(axis=0)
    between = 0.0
    within = 0.0
    for value in set(groups):
        rows = X[groups == value]
        mu = rows.mean(axis=0)
        between += rows.shape[0] * float(np.square(mu - overall).sum())
        within += float(np.square(rows - mu).sum())
    if within <= 0.0:
        return float("inf") if between > 0.0 else 0.0
    return between / within


@dataclass(frozen=True)
class SeparabilityReport:
    """Scatter ratios per stage; large means the stage is solvable."""

    stage1: float
    stage2: dict
    stage3: dict

    def summary(self) -> str:
        lines = [f"stage1 (classes): {self.stage1:.3f}"]
        for general_class, ratio in self.stage2.items():
            lines.append(f"stage2 {general_class.value}: {ratio:.3f}")
        for label, ratio in self.stage3.items():
            lines.append(f"stage3 {label.value}: {ratio:.3f}")
        return "\n".join(lines)


def separability_report(corpus) -> SeparabilityReport:
    """Fisher trace ratios on normalized rows, one per stage decision.

    Accepts a session list or a prebuilt dataset. Ratios are invariant
    to adding a constant to every vector.
    """
    dataset = corpus if isinstance(corpus, Dataset) else build_dataset(corpus)
    X = normalize_rows(dataset.features)

    stage1 = _fisher_trace_ratio(X, dataset.class_targets)
    stage2 = {}
    for general_class in sorted(set(dataset.class_targets)):
        rows = np.flatnonzero(dataset.class_targets == general_class)
        if len(set(dataset.label_targets[rows])) < 2:
            continue
        stage2[general_class] = _fisher_trace_ratio(X[rows], dataset.label_targets[rows])
    stage3 = {}
    for label in sorted(set(dataset.label_targets)):
        rows = np.flatnonzero(dataset.label_targets == label)
        if len(set(dataset.freshness_targets[rows])) < 2:
            continue
        stage3[label] = _fisher_trace_ratio(X[rows], dataset.freshness_targets[rows])
    return SeparabilityReport(stage1=stage1, stage2=stage2, stage3=stage3)


# -- presets --------------------------------------------------------------------

PRESETS: dict[str, SynthConfig] = {
    "easy": SynthConfig(
        sessions_per_cell=2,
        cycles_per_session=3,
        class_separation=8.0,
        label_separation=3.0,
        freshness_drift=3.0,
        noise_sigma=0.15,
        session_jitter=0.2,
    ),
    "hier": SynthConfig(
        sessions_per_cell=3,
        cycles_per_session=5,
        class_separation=14.0,
        label_separation=2.5,
        freshness_drift=4.0,
        noise_sigma=0.25,
        session_jitter=0.3,
    ),
    "flat": SynthConfig(
        sessions_per_cell=3,
        cycles_per_session=5,
        class_separation=3.0,
        label_separation=2.8,
        freshness_drift=2.5,
        noise_sigma=0.4,
        session_jitter=0.4,
    ),
    "hard": SynthConfig(
        sessions_per_cell=3,
        cycles_per_session=5,
        class_separation=1.2,
        label_separation=0.8,
        freshness_drift=0.5,
        noise_sigma=1.0,
        session_jitter=1.0,
    ),
}


def preset_config(name: str, seed: int | None = None, **overrides) -> SynthConfig:
    if name not in PRESETS:
        raise InvalidConfig(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    config = PRESETS[name]
    if seed is not None:
        overrides["seed"] = seed
    return replace(config, **overrides) if overrides else config


# convenience for tests and docs: labels of one class, all freshness levels
def cells_for_classes(*classes: GeneralClass) -> tuple:
    return tuple(
        (label, fresh)
        for general_class in classes
        for label in labels_for(general_class)
        for fresh in FreshnessLevel
    )
