"""Food taxonomy: general classes, specific labels, freshness levels.

The taxonomy is fixed: four general classes partition fourteen specific
labels (3 + 4 + 4 + 3), and freshness is a four-step ordered scale. Enum
values double as the canonical strings of the corpus file format.
"""

from __future__ import annotations

import enum
from functools import total_ordering

from .errors import UnknownLabel


@total_ordering
class _OrderedByDefinition(enum.Enum):
    """Enum whose members sort by definition order within their own type."""

    def __lt__(self, other):
        if type(self) is not type(other):
            return NotImplemented
        order = {m: i for i, m in enumerate(type(self))}
        return order[self] < order[other]

    @property
    def index(self) -> int:
        return list(type(self)).index(self)

    def __repr__(self) -> str:  # keep reprs short in reports and tests
        return f"{type(self).__name__}.{self.name}"


class GeneralClass(_OrderedByDefinition):
    MEAT = "meat"
    VEGETABLE = "vegetable"
    FRUIT = "fruit"
    DRINK = "drink"


class SpecificLabel(_OrderedByDefinition):
    PORK = "pork"
    STEAK = "steak"
    CHICKEN_MEAT = "chicken_meat"
    BROCCOLI = "broccoli"
    GREEN_PEPPER = "green_pepper"
    MUSHROOM = "mushroom"
    CARROT = "carrot"
    APPLE = "apple"
    TANGERINE = "tangerine"
    BANANA = "banana"
    PEAR = "pear"
    COFFEE = "coffee"
    MILK = "milk"
    ORANGE_JUICE = "orange_juice"

    @property
    def general_class(self) -> GeneralClass:
        return _CLASS_OF_LABEL[self]


class FreshnessLevel(_OrderedByDefinition):
    FRESH = "fresh"
    MOSTLY_FRESH = "mostly_fresh"
    PARTIALLY_ROTTEN = "partially_rotten"
    ROTTEN = "rotten"

    @property
    def rank(self) -> int:
        """Position on the rancidity scale: 0 (fresh) .. 3 (rotten)."""
        return self.index


LABELS_BY_CLASS: dict[GeneralClass, tuple[SpecificLabel, ...]] = {
    GeneralClass.MEAT: (
        SpecificLabel.PORK,
        SpecificLabel.STEAK,
        SpecificLabel.CHICKEN_MEAT,
    ),
    GeneralClass.VEGETABLE: (
        SpecificLabel.BROCCOLI,
        SpecificLabel.GREEN_PEPPER,
        SpecificLabel.MUSHROOM,
        SpecificLabel.CARROT,
    ),
    GeneralClass.FRUIT: (
        SpecificLabel.APPLE,
        SpecificLabel.TANGERINE,
        SpecificLabel.BANANA,
        SpecificLabel.PEAR,
    ),
    GeneralClass.DRINK: (
        SpecificLabel.COFFEE,
        SpecificLabel.MILK,
        SpecificLabel.ORANGE_JUICE,
    ),
}

_CLASS_OF_LABEL: dict[SpecificLabel, GeneralClass] = {
    label: cls for cls, labels in LABELS_BY_CLASS.items() for label in labels
}


def labels_for(general_class: GeneralClass) -> tuple[SpecificLabel, ...]:
    return LABELS_BY_CLASS[general_class]


def _canonical(text: str) -> str:
    return text.strip().lower().replace(" ", "_").replace("-", "_")


def _parse_member(enum_type, text: str):
    if not isinstance(text, str):
        raise UnknownLabel(f"expected a {enum_type.__name__} string, got {text!r}")
    try:
        return enum_type(_canonical(text))
    except ValueError:
        known = ", ".join(m.value for m in enum_type)
        raise UnknownLabel(
            f"{text!r} is not a known {enum_type.__name__} (one of: {known})"
        ) from None


def parse_general_class(text: str) -> GeneralClass:
    """Case-insensitive lookup; spaces and hyphens count as underscores."""
    return _parse_member(GeneralClass, text)


def parse_specific_label(text: str) -> SpecificLabel:
    return _parse_member(SpecificLabel, text)


def parse_freshness(text: str) -> FreshnessLevel:
    return _parse_member(FreshnessLevel, text)
