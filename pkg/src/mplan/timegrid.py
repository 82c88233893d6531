"""Week-grained capacity calendar for the work packages schedule.

Week ``w`` covers the date range ``[start + 7(w-1), start + 7w)``. Every
working week offers ``fte_count * hours_per_fte_week`` hours; blackout weeks
offer none.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, timedelta
from fractions import Fraction

from .effort import as_hours, hours_to_json
from .errors import PlanError, WeekOutOfHorizon


@dataclass(frozen=True)
class Calendar:
    start_date: date
    horizon_weeks: int
    fte_count: Fraction
    hours_per_fte_week: Fraction = Fraction(40)
    blackouts: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "fte_count", as_hours(self.fte_count))
        object.__setattr__(self, "hours_per_fte_week", as_hours(self.hours_per_fte_week))
        object.__setattr__(self, "blackouts", frozenset(int(w) for w in self.blackouts))
        if self.horizon_weeks < 1:
            raise PlanError(f"horizon must be at least one week, got {self.horizon_weeks}")
        if self.fte_count <= 0 or self.hours_per_fte_week <= 0:
            raise PlanError("fte_count and hours_per_fte_week must be positive")
        for w in self.blackouts:
            if not 1 <= w <= self.horizon_weeks:
                raise WeekOutOfHorizon(f"blackout week {w} outside 1..{self.horizon_weeks}")

    @property
    def weekly_hours(self) -> Fraction:
        return self.fte_count * self.hours_per_fte_week

    def is_blackout(self, week: int) -> bool:
        return week in self.blackouts

    def capacity(self, week: int) -> Fraction:
        """Available hours in ``week``: full for working weeks, zero for blackouts."""
        if not 1 <= week <= self.horizon_weeks:
            raise WeekOutOfHorizon(f"week {week} outside 1..{self.horizon_weeks}")
        if week in self.blackouts:
            return Fraction(0)
        return self.weekly_hours

    def week_of(self, d: date) -> int:
        """Week index containing ``d``; may lie outside 1..horizon."""
        return (d - self.start_date).days // 7 + 1

    def week_start(self, week: int) -> date:
        return self.start_date + timedelta(days=7 * (week - 1))

    def week_end(self, week: int) -> date:
        """Last day of ``week``; due dates align with this edge."""
        return self.start_date + timedelta(days=7 * week - 1)

    def working_weeks(self, upto: int | None = None) -> list[int]:
        end = self.horizon_weeks if upto is None else min(upto, self.horizon_weeks)
        return [w for w in range(1, end + 1) if w not in self.blackouts]

    def to_json_dict(self) -> dict:
        return {
            "start_date": self.start_date.isoformat(),
            "horizon_weeks": self.horizon_weeks,
            "fte_count": hours_to_json(self.fte_count),
            "hours_per_fte_week": hours_to_json(self.hours_per_fte_week),
            "blackout_weeks": sorted(self.blackouts),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Calendar":
        return cls(
            start_date=date.fromisoformat(d["start_date"]),
            horizon_weeks=int(d["horizon_weeks"]),
            fte_count=as_hours(d["fte_count"]),
            hours_per_fte_week=as_hours(d.get("hours_per_fte_week", 40)),
            blackouts=frozenset(int(w) for w in d.get("blackout_weeks", [])),
        )
