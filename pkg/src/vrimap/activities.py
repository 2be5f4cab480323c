"""Canonical activity classes and the 15-minute day grid."""

from __future__ import annotations

import enum

STEPS_PER_DAY = 96
STEP_MINUTES = 15
MINUTES_PER_DAY = STEPS_PER_DAY * STEP_MINUTES  # 1440
N_CLASSES = 8


class Activity(enum.IntEnum):
    """The eight daily activity classes, in canonical index order 0-7."""

    ESSENTIAL_HEALTH = 0      # c01: health-related activities
    BIOLOGICAL_NEEDS = 1      # c02: eating, sleeping
    WORKING = 2               # c03
    EDUCATION = 3             # c04
    HOUSEHOLD_MANAGEMENT = 4  # c05
    PERSONAL_OBLIGATIONS = 5  # c06: shopping, banking, childcare
    PERSONAL_PREFERENCE = 6   # c07: leisure
    OTHER = 7                 # c08: outside travel and residual time

    @property
    def code(self) -> str:
        """Canonical short code, 'c01' .. 'c08'."""
        return f"c{self.value + 1:02d}"

    @classmethod
    def from_code(cls, code: str) -> "Activity":
        try:
            return _BY_CODE[code]
        except KeyError:
            raise ValueError(f"unknown activity class code {code!r}") from None


_BY_CODE = {a.code: a for a in Activity}

ACTIVITY_CODES = tuple(a.code for a in Activity)

ACTIVITY_LABELS = {
    Activity.ESSENTIAL_HEALTH: "essential health",
    Activity.BIOLOGICAL_NEEDS: "biological needs",
    Activity.WORKING: "working",
    Activity.EDUCATION: "education",
    Activity.HOUSEHOLD_MANAGEMENT: "household management",
    Activity.PERSONAL_OBLIGATIONS: "personal obligations",
    Activity.PERSONAL_PREFERENCE: "personal preference",
    Activity.OTHER: "others",
}


def step_of_minute(minute: float) -> int:
    """Day-grid step covering the given minute since midnight."""
    if not 0 <= minute < MINUTES_PER_DAY:
        raise ValueError(f"minute {minute} outside [0, {MINUTES_PER_DAY})")
    return int(minute // STEP_MINUTES)


def step_midpoint_minutes(step: int) -> float:
    """Midpoint, in minutes since midnight, of a day-grid step."""
    if not 0 <= step < STEPS_PER_DAY:
        raise ValueError(f"step {step} outside [0, {STEPS_PER_DAY})")
    return step * STEP_MINUTES + STEP_MINUTES / 2.0
