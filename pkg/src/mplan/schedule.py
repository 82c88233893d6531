"""Work packages schedule: capacity-grid placements and the greedy packer.

The schedule arranges each milestone's work package (its allocated hours) on
a week-by-week capacity grid. Placements may be built by hand with
:func:`place` or packed automatically by :func:`auto_schedule`, which follows
a fixed order: crosscutting effort first, then packages anchored to hard
dates (filled backward from the anchor), then the remaining packages forward
in topological order, finally shifting successors late enough to respect
finish-to-finish ordering. When a hard anchor cannot be met the packer still
returns a complete relaxed schedule and attaches an ``infeasible`` violation
carrying the shortfall and the earliest feasible week, so the planner can
negotiate instead of being stonewalled.

Hours are exact rationals; the packer is a pure function of its inputs and
repeated runs are identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .effort import as_hours, fmt_hours, hours_to_json
from .errors import (
    AnchorViolation,
    BlackoutViolation,
    CancelledRun,
    CapacityExceeded,
    ConstraintViolation,
    EffortMismatch,
    HardDateBeyondHorizon,
    HardDateInPast,
    InfeasibleSchedule,
    NoWorkPackage,
    PlanError,
    PoolExceedsCapacity,
    SEVERITY_WARNING,
    UnknownMilestone,
    UnscheduledMilestone,
    Violation,
    WeekOutOfHorizon,
    violation,
)
from .milestones import Milestone, MilestoneGraph, MilestoneKind
from .timegrid import Calendar

_ZERO = Fraction(0)

CancelCheck = Callable[[], bool]


@dataclass
class WorkPackageConstraint:
    """Planner-supplied limits on how one work package may be scheduled.

    ``max_weekly_hours`` caps parallelism (e.g. one person / 40 h a week);
    ``not_before_*`` gates the earliest week any of the work may occur,
    either the week containing a date or the week after a milestone
    completes; ``contiguous`` forbids gaps in working weeks.
    """

    milestone_id: str
    max_weekly_hours: Fraction | None = None
    not_before_milestone: str | None = None
    not_before_date: date | None = None
    contiguous: bool = False

    def __post_init__(self):
        if self.max_weekly_hours is not None:
            self.max_weekly_hours = as_hours(self.max_weekly_hours)
            if self.max_weekly_hours <= 0:
                raise ConstraintViolation("max_weekly_hours must be positive", kind="max_weekly_hours")
        if self.not_before_milestone is not None and self.not_before_date is not None:
            raise ConstraintViolation("not_before takes a milestone or a date, not both",
                                      kind="not_before")

    def to_json_dict(self) -> dict:
        return {
            "milestone_id": self.milestone_id,
            "max_weekly_hours": None if self.max_weekly_hours is None else hours_to_json(self.max_weekly_hours),
            "not_before_milestone": self.not_before_milestone,
            "not_before_date": self.not_before_date.isoformat() if self.not_before_date else None,
            "contiguous": self.contiguous,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "WorkPackageConstraint":
        return cls(
            milestone_id=d["milestone_id"],
            max_weekly_hours=None if d.get("max_weekly_hours") is None else as_hours(d["max_weekly_hours"]),
            not_before_milestone=d.get("not_before_milestone"),
            not_before_date=date.fromisoformat(d["not_before_date"]) if d.get("not_before_date") else None,
            contiguous=bool(d.get("contiguous", False)),
        )


def _hours_map(raw: Mapping) -> dict[int, Fraction]:
    out: dict[int, Fraction] = {}
    for week, hours in raw.items():
        h = as_hours(hours)
        if h > 0:
            out[int(week)] = h
    return dict(sorted(out.items()))


@dataclass
class Placement:
    """Hours-per-week assignment of one work package; its extent is the timebox."""

    milestone_id: str
    hours_by_week: dict[int, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        self.hours_by_week = _hours_map(self.hours_by_week)

    @property
    def total(self) -> Fraction:
        return sum(self.hours_by_week.values(), _ZERO)

    @property
    def start_week(self) -> int:
        return min(self.hours_by_week)

    @property
    def due_week(self) -> int:
        return max(self.hours_by_week)

    @property
    def timebox(self) -> tuple[int, int]:
        return (self.start_week, self.due_week)

    def copy(self) -> "Placement":
        return Placement(self.milestone_id, dict(self.hours_by_week))

    def to_json_dict(self) -> dict:
        return {
            "milestone_id": self.milestone_id,
            "hours_by_week": {str(w): hours_to_json(h) for w, h in sorted(self.hours_by_week.items())},
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Placement":
        return cls(milestone_id=d["milestone_id"], hours_by_week=d.get("hours_by_week", {}))


@dataclass
class Buffer:
    """Planner-inserted reserved capacity protecting a critical milestone."""

    after_milestone_id: str
    hours_by_week: dict[int, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        self.hours_by_week = _hours_map(self.hours_by_week)

    def copy(self) -> "Buffer":
        return Buffer(self.after_milestone_id, dict(self.hours_by_week))

    def to_json_dict(self) -> dict:
        return {
            "after_milestone_id": self.after_milestone_id,
            "hours_by_week": {str(w): hours_to_json(h) for w, h in sorted(self.hours_by_week.items())},
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Buffer":
        return cls(after_milestone_id=d["after_milestone_id"], hours_by_week=d.get("hours_by_week", {}))


@dataclass
class Schedule:
    calendar: Calendar
    placements: dict[str, Placement] = field(default_factory=dict)
    crosscutting_profile: dict[int, Fraction] = field(default_factory=dict)
    buffers: list[Buffer] = field(default_factory=list)
    anchors: dict[str, int] = field(default_factory=dict)
    violations: tuple[Violation, ...] = ()

    def used(self, week: int) -> Fraction:
        total = self.crosscutting_profile.get(week, _ZERO)
        for pl in self.placements.values():
            total += pl.hours_by_week.get(week, _ZERO)
        for buf in self.buffers:
            total += buf.hours_by_week.get(week, _ZERO)
        return total

    def residual(self, week: int) -> Fraction:
        return self.calendar.capacity(week) - self.used(week)

    def last_loaded_week(self) -> int:
        """Latest week holding any anchor, placement, buffer or profile hours."""
        last = 0
        for pl in self.placements.values():
            if pl.hours_by_week:
                last = max(last, pl.due_week)
        for buf in self.buffers:
            if buf.hours_by_week:
                last = max(last, max(buf.hours_by_week))
        if self.anchors:
            last = max(last, max(self.anchors.values()))
        if self.crosscutting_profile:
            last = max(last, max(self.crosscutting_profile))
        return last

    def clone(self) -> "Schedule":
        return Schedule(
            calendar=self.calendar,
            placements={mid: pl.copy() for mid, pl in self.placements.items()},
            crosscutting_profile=dict(self.crosscutting_profile),
            buffers=[b.copy() for b in self.buffers],
            anchors=dict(self.anchors),
            violations=self.violations,
        )

    def to_json_dict(self) -> dict:
        return {
            "placements": [pl.to_json_dict() for pl in self.placements.values()],
            "crosscutting_profile": {str(w): hours_to_json(h)
                                     for w, h in sorted(self.crosscutting_profile.items())},
            "buffers": [b.to_json_dict() for b in self.buffers],
            "anchors": dict(self.anchors),
            "violations": [v.to_json_dict() for v in self.violations],
        }

    @classmethod
    def from_json_dict(cls, d: dict, calendar: Calendar) -> "Schedule":
        return cls(
            calendar=calendar,
            placements={rec["milestone_id"]: Placement.from_json_dict(rec)
                        for rec in d.get("placements", [])},
            crosscutting_profile=_hours_map(d.get("crosscutting_profile", {})),
            buffers=[Buffer.from_json_dict(rec) for rec in d.get("buffers", [])],
            anchors={mid: int(w) for mid, w in d.get("anchors", {}).items()},
            violations=tuple(Violation.from_json_dict(v) for v in d.get("violations", [])),
        )


@dataclass
class PackContext:
    """Everything the scheduler needs to know about a plan, by value."""

    calendar: Calendar
    milestones: dict[str, Milestone]
    graph: MilestoneGraph
    package_efforts: dict[str, Fraction]
    constraints: dict[str, WorkPackageConstraint]

    def effort(self, milestone_id: str) -> Fraction:
        return self.package_efforts.get(milestone_id, _ZERO)


# --------------------------------------------------------------------------
# due-week derivation shared by the packer, the validator and date reporting
# --------------------------------------------------------------------------

def effective_due_week(ctx: PackContext, schedule: Schedule, milestone_id: str,
                       memo: dict[str, int | None] | None = None) -> int | None:
    """Due week used for finish-to-finish checks.

    Placed packages use their placement's last week. Zero-effort milestones
    fall back to their commitment date, then their hard date, then the
    maximum over their predecessors (0 when unconstrained). ``None`` means
    the milestone has effort but no placement yet, so its due is unknown.
    """
    if memo is None:
        memo = {}
    if milestone_id in memo:
        return memo[milestone_id]
    m = ctx.milestones[milestone_id]
    pl = schedule.placements.get(milestone_id)
    due: int | None
    if pl is not None and pl.hours_by_week:
        due = pl.due_week
    elif ctx.effort(milestone_id) > 0:
        due = None
    elif m.commitment_date is not None:
        due = ctx.calendar.week_of(m.commitment_date)
    elif m.hard_date is not None:
        due = ctx.calendar.week_of(m.hard_date)
    else:
        due = 0
        for pred in ctx.graph.predecessors(milestone_id):
            pd = effective_due_week(ctx, schedule, pred, memo)
            if pd is None:
                due = None
                break
            due = max(due, pd)
    memo[milestone_id] = due
    return due


def _ff_floor(ctx: PackContext, schedule: Schedule, milestone_id: str) -> int:
    """Smallest legal due week given predecessors' effective dues."""
    memo: dict[str, int | None] = {}
    floor = 0
    for pred in ctx.graph.predecessors(milestone_id):
        due = effective_due_week(ctx, schedule, pred, memo)
        if due is not None:
            floor = max(floor, due)
    return floor


def _window_start(ctx: PackContext, schedule: Schedule, milestone_id: str,
                  *, static_only: bool = False) -> int | None:
    """Earliest week the package may hold work, from its not_before gate.

    Returns ``None`` when a milestone gate cannot be resolved yet (the
    referenced package has no placement). ``static_only`` resolves date
    gates but treats unresolved milestone gates as week 1.
    """
    c = ctx.constraints.get(milestone_id)
    if c is None:
        return 1
    if c.not_before_date is not None:
        return max(1, ctx.calendar.week_of(c.not_before_date))
    if c.not_before_milestone is not None:
        if c.not_before_milestone not in ctx.milestones:
            raise UnknownMilestone(
                f"not_before references unknown milestone {c.not_before_milestone!r}")
        due = effective_due_week(ctx, schedule, c.not_before_milestone)
        if due is None:
            return 1 if static_only else None
        return max(1, due + 1)
    return 1


def _anchor_week(ctx: PackContext, schedule: Schedule, milestone_id: str) -> int | None:
    if milestone_id in schedule.anchors:
        return schedule.anchors[milestone_id]
    m = ctx.milestones.get(milestone_id)
    if m is not None and m.hard_date is not None:
        return ctx.calendar.week_of(m.hard_date)
    return None


# --------------------------------------------------------------------------
# grid primitives
# --------------------------------------------------------------------------

class _Grid:
    """Mutable residual-capacity view the packer fills against."""

    def __init__(self, schedule: Schedule):
        cal = schedule.calendar
        self.calendar = cal
        self.residual = {w: cal.capacity(w) - schedule.used(w)
                         for w in range(1, cal.horizon_weeks + 1)}

    def take(self, week: int, hours: Fraction) -> None:
        self.residual[week] -= hours

    def give(self, week: int, hours: Fraction) -> None:
        self.residual[week] += hours

    def give_map(self, hours_by_week: dict[int, Fraction]) -> None:
        for w, h in hours_by_week.items():
            self.give(w, h)

    def take_map(self, hours_by_week: dict[int, Fraction]) -> None:
        for w, h in hours_by_week.items():
            self.take(w, h)


def _forward_fill(grid: _Grid, hours: Fraction, *, start: int,
                  cap: Fraction | None) -> tuple[dict[int, Fraction], Fraction]:
    cal = grid.calendar
    left = hours
    out: dict[int, Fraction] = {}
    for w in range(max(1, start), cal.horizon_weeks + 1):
        if left <= 0:
            break
        if cal.is_blackout(w):
            continue
        amt = min(left, grid.residual[w])
        if cap is not None:
            amt = min(amt, cap)
        if amt > 0:
            out[w] = amt
            grid.take(w, amt)
            left -= amt
    return out, left


def _backward_fill(grid: _Grid, hours: Fraction, *, end: int, floor: int,
                   cap: Fraction | None) -> tuple[dict[int, Fraction], Fraction]:
    cal = grid.calendar
    left = hours
    out: dict[int, Fraction] = {}
    for w in range(min(end, cal.horizon_weeks), max(1, floor) - 1, -1):
        if left <= 0:
            break
        if cal.is_blackout(w):
            continue
        amt = min(left, grid.residual[w])
        if cap is not None:
            amt = min(amt, cap)
        if amt > 0:
            out[w] = amt
            grid.take(w, amt)
            left -= amt
    return dict(sorted(out.items())), left


def _contiguous_fill(grid: _Grid, hours: Fraction, *, start: int, cap: Fraction | None,
                     due_floor: int) -> dict[int, Fraction] | None:
    """Earliest gap-free fill (blackout weeks are skipped, not gaps)."""
    cal = grid.calendar
    for s in range(max(1, start), cal.horizon_weeks + 1):
        if cal.is_blackout(s):
            continue
        trial: dict[int, Fraction] = {}
        left = hours
        w = s
        broken = False
        while left > 0 and w <= cal.horizon_weeks:
            if cal.is_blackout(w):
                w += 1
                continue
            amt = min(left, grid.residual[w])
            if cap is not None:
                amt = min(amt, cap)
            if amt <= 0:
                broken = True
                break
            trial[w] = amt
            left -= amt
            w += 1
        if not broken and left == 0 and max(trial) >= due_floor:
            grid.take_map(trial)
            return trial
    return None


def _shift_tail(grid: _Grid, placement: Placement, *, floor: int,
                cap: Fraction | None) -> bool:
    """Move part of the final week's hours to the first open week >= floor.

    Only the due week must move for finish-to-finish ordering; the bulk of
    the work stays where it was packed.
    """
    cal = grid.calendar
    if not placement.hours_by_week or placement.due_week >= floor:
        return True
    for t in range(max(1, floor), cal.horizon_weeks + 1):
        if cal.is_blackout(t):
            continue
        room = grid.residual[t]
        if cap is not None:
            room = min(room, cap - placement.hours_by_week.get(t, _ZERO))
        if room <= 0:
            continue
        tail_week = placement.due_week
        delta = min(placement.hours_by_week[tail_week], room)
        placement.hours_by_week[tail_week] -= delta
        if placement.hours_by_week[tail_week] == 0:
            del placement.hours_by_week[tail_week]
        placement.hours_by_week[t] = placement.hours_by_week.get(t, _ZERO) + delta
        placement.hours_by_week = dict(sorted(placement.hours_by_week.items()))
        grid.give(tail_week, delta)
        grid.take(t, delta)
        return True
    return False


# --------------------------------------------------------------------------
# schedule operations
# --------------------------------------------------------------------------

def anchor_hard_milestones(schedule: Schedule, milestones: Iterable[Milestone]) -> Schedule:
    """Pin every hard milestone to the week containing its hard date."""
    cal = schedule.calendar
    anchors: dict[str, int] = {}
    for m in milestones:
        if m.kind is not MilestoneKind.HARD:
            continue
        week = cal.week_of(m.hard_date)
        if week < 1:
            raise HardDateInPast(
                f"{m.id}: hard date {m.hard_date.isoformat()} is before the project start")
        if week > cal.horizon_weeks:
            raise HardDateBeyondHorizon(
                f"{m.id}: hard date {m.hard_date.isoformat()} lies beyond week {cal.horizon_weeks}")
        anchors[m.id] = week
    schedule.anchors = anchors
    return schedule


def spread_crosscutting(schedule: Schedule, pool_hours) -> Schedule:
    """Distribute the crosscutting pool uniformly over the loaded span.

    Each working week between the project start and the last anchored or
    placed week receives exactly ``pool / n`` hours (rational division, so
    the totals reconcile exactly).
    """
    pool = as_hours(pool_hours)
    old = schedule.crosscutting_profile
    schedule.crosscutting_profile = {}
    if pool == 0:
        return schedule
    span_end = schedule.last_loaded_week() or schedule.calendar.horizon_weeks
    weeks = schedule.calendar.working_weeks(upto=span_end)
    if not weeks:
        schedule.crosscutting_profile = old
        raise PoolExceedsCapacity("no working weeks available to spread the crosscutting pool")
    per_week = pool / len(weeks)
    for w in weeks:
        if per_week > schedule.residual(w):
            schedule.crosscutting_profile = old
            raise PoolExceedsCapacity(
                f"crosscutting share {fmt_hours(per_week)} h exceeds free capacity in week {w}")
    schedule.crosscutting_profile = {w: per_week for w in weeks}
    return schedule


def place(ctx: PackContext, schedule: Schedule, milestone_id: str, hours_by_week,
          *, finalize: bool = True) -> Schedule:
    """Set a work package's placement by hand, validating atomically.

    Rejections leave the schedule untouched. With ``finalize`` the placement
    total must equal the package effort; without it partial placements are
    accepted (the validator will flag them until completed).
    """
    if milestone_id not in ctx.milestones:
        raise UnknownMilestone(f"milestone {milestone_id!r} does not exist")
    effort = ctx.effort(milestone_id)
    if effort <= 0:
        raise NoWorkPackage(f"{milestone_id}: milestone has no work-package effort")
    candidate = Placement(milestone_id, _hours_map(hours_by_week))
    if not candidate.hours_by_week:
        raise ConstraintViolation(f"{milestone_id}: placement needs positive hours",
                                  kind="nonpositive_hours")
    cal = schedule.calendar
    old = schedule.placements.get(milestone_id)
    for week, hours in candidate.hours_by_week.items():
        if not 1 <= week <= cal.horizon_weeks:
            raise WeekOutOfHorizon(f"{milestone_id}: week {week} outside 1..{cal.horizon_weeks}")
        if cal.is_blackout(week):
            raise BlackoutViolation(f"{milestone_id}: week {week} is blacked out", week=week)
        already = schedule.used(week) - (old.hours_by_week.get(week, _ZERO) if old else _ZERO)
        free = cal.capacity(week) - already
        if hours > free:
            raise CapacityExceeded(
                f"{milestone_id}: week {week} over capacity by {fmt_hours(hours - free)} h",
                week=week, overflow=hours - free)
    c = ctx.constraints.get(milestone_id)
    if c is not None:
        if c.max_weekly_hours is not None:
            for week, hours in candidate.hours_by_week.items():
                if hours > c.max_weekly_hours:
                    raise ConstraintViolation(
                        f"{milestone_id}: week {week} exceeds the {fmt_hours(c.max_weekly_hours)} h/week cap",
                        kind="max_weekly_hours")
        window = _window_start(ctx, schedule, milestone_id)
        if window is None:
            raise ConstraintViolation(
                f"{milestone_id}: not_before milestone {c.not_before_milestone!r} has no placement yet",
                kind="not_before_unresolved")
        if candidate.start_week < window:
            raise ConstraintViolation(
                f"{milestone_id}: work starts in week {candidate.start_week}, gate opens week {window}",
                kind="not_before")
        if c.contiguous:
            for w in range(candidate.start_week, candidate.due_week + 1):
                if not cal.is_blackout(w) and w not in candidate.hours_by_week:
                    raise ConstraintViolation(
                        f"{milestone_id}: gap at week {w} breaks the contiguous timebox",
                        kind="contiguous")
    anchor = _anchor_week(ctx, schedule, milestone_id)
    if anchor is not None and candidate.due_week > anchor:
        raise AnchorViolation(
            f"{milestone_id}: due week {candidate.due_week} is past its anchor week {anchor}")
    if finalize and candidate.total != effort:
        raise EffortMismatch(
            f"{milestone_id}: placed {fmt_hours(candidate.total)} h of "
            f"{fmt_hours(effort)} h work-package effort")
    schedule.placements[milestone_id] = candidate
    return schedule


def remove_placement(schedule: Schedule, milestone_id: str) -> Schedule:
    if milestone_id not in schedule.placements:
        raise UnknownMilestone(f"no placement for milestone {milestone_id!r}")
    del schedule.placements[milestone_id]
    return schedule


def add_buffer(schedule: Schedule, buffer: Buffer) -> Schedule:
    """Reserve capacity; validated against the same grid rules as placements."""
    cal = schedule.calendar
    for week, hours in buffer.hours_by_week.items():
        if not 1 <= week <= cal.horizon_weeks:
            raise WeekOutOfHorizon(f"buffer week {week} outside 1..{cal.horizon_weeks}")
        if cal.is_blackout(week):
            raise BlackoutViolation(f"buffer week {week} is blacked out", week=week)
        if hours > schedule.residual(week):
            raise CapacityExceeded(
                f"buffer overflows week {week}", week=week,
                overflow=hours - schedule.residual(week))
    schedule.buffers.append(buffer)
    return schedule


# --------------------------------------------------------------------------
# validation and date derivation
# --------------------------------------------------------------------------

def validate_schedule(ctx: PackContext, schedule: Schedule, pool_hours) -> list[Violation]:
    """Full rescan of every schedule rule; empty list means the plan holds."""
    cal = schedule.calendar
    out: list[Violation] = []
    pool = as_hours(pool_hours)

    for week in range(1, cal.horizon_weeks + 1):
        used = schedule.used(week)
        if used > cal.capacity(week):
            if cal.is_blackout(week):
                out.append(violation("blackout_violation",
                                     f"week {week} is blacked out but holds {fmt_hours(used)} h",
                                     week=week))
            else:
                out.append(violation("capacity_exceeded",
                                     f"week {week} over capacity by {fmt_hours(used - cal.capacity(week))} h",
                                     week=week, overflow=used - cal.capacity(week)))

    for pl in schedule.placements.values():
        for week in pl.hours_by_week:
            if not 1 <= week <= cal.horizon_weeks:
                out.append(violation("week_out_of_horizon",
                                     f"{pl.milestone_id}: week {week} outside the horizon",
                                     subject=pl.milestone_id, week=week))

    for mid, m in ctx.milestones.items():
        effort = ctx.effort(mid)
        pl = schedule.placements.get(mid)
        if effort > 0:
            if pl is None or not pl.hours_by_week:
                out.append(violation("incomplete_placement",
                                     f"{mid}: no placement for its {fmt_hours(effort)} h work package",
                                     subject=mid, missing=effort))
            elif pl.total < effort:
                out.append(violation("incomplete_placement",
                                     f"{mid}: {fmt_hours(effort - pl.total)} h still unplaced",
                                     subject=mid, missing=effort - pl.total))
            elif pl.total > effort:
                out.append(violation("effort_mismatch",
                                     f"{mid}: placed {fmt_hours(pl.total)} h of {fmt_hours(effort)} h",
                                     subject=mid))
        elif pl is not None and pl.hours_by_week:
            out.append(violation("effort_mismatch",
                                 f"{mid}: placement exists but the work package is empty",
                                 subject=mid))

        c = ctx.constraints.get(mid)
        if c is not None and pl is not None and pl.hours_by_week:
            if c.max_weekly_hours is not None:
                if c.max_weekly_hours > cal.weekly_hours:
                    out.append(violation("constraint_cap_exceeds_capacity",
                                         f"{mid}: cap {fmt_hours(c.max_weekly_hours)} h exceeds weekly capacity",
                                         severity=SEVERITY_WARNING, subject=mid))
                for week, hours in pl.hours_by_week.items():
                    if hours > c.max_weekly_hours:
                        out.append(violation("constraint_violation",
                                             f"{mid}: week {week} exceeds its {fmt_hours(c.max_weekly_hours)} h cap",
                                             subject=mid, kind="max_weekly_hours", week=week))
            window = _window_start(ctx, schedule, mid, static_only=True)
            if window is not None and pl.start_week < window:
                out.append(violation("constraint_violation",
                                     f"{mid}: work starts week {pl.start_week} before its gate week {window}",
                                     subject=mid, kind="not_before"))
            if c.contiguous:
                for w in range(pl.start_week, pl.due_week + 1):
                    if not cal.is_blackout(w) and w not in pl.hours_by_week:
                        out.append(violation("constraint_violation",
                                             f"{mid}: gap at week {w} breaks contiguity",
                                             subject=mid, kind="contiguous", week=w))
                        break

        anchor = _anchor_week(ctx, schedule, mid)
        if anchor is not None and pl is not None and pl.hours_by_week and pl.due_week > anchor:
            out.append(violation("anchor_violation",
                                 f"{mid}: due week {pl.due_week} is past anchor week {anchor}",
                                 subject=mid, due_week=pl.due_week, anchor_week=anchor))

    memo: dict[str, int | None] = {}
    for dep in ctx.graph.dependencies():
        pred_due = effective_due_week(ctx, schedule, dep.predecessor, memo)
        succ_due = effective_due_week(ctx, schedule, dep.successor, memo)
        if pred_due is None or succ_due is None:
            continue  # incomplete placements already reported
        if succ_due < pred_due:
            out.append(violation("dependency_order",
                                 f"{dep.successor} due week {succ_due} precedes "
                                 f"{dep.predecessor} due week {pred_due}",
                                 subject=dep.successor,
                                 predecessor=dep.predecessor, successor=dep.successor))

    profile_total = sum(schedule.crosscutting_profile.values(), _ZERO)
    if profile_total != pool:
        out.append(violation("crosscutting_incomplete",
                             f"crosscutting profile holds {fmt_hours(profile_total)} h "
                             f"of a {fmt_hours(pool)} h pool"))
    for week in schedule.crosscutting_profile:
        if cal.is_blackout(week):
            out.append(violation("blackout_violation",
                                 f"crosscutting hours on blackout week {week}", week=week))

    for buf in schedule.buffers:
        if buf.after_milestone_id not in ctx.milestones:
            out.append(violation("unknown_milestone",
                                 f"buffer references missing milestone {buf.after_milestone_id!r}",
                                 severity=SEVERITY_WARNING, subject=buf.after_milestone_id))
    return out


def derive_due_dates(ctx: PackContext, schedule: Schedule) -> dict[str, date]:
    """Planned date per milestone: hard dates as promised, placed packages at
    the right edge of their timebox, commitments as given, and bare
    zero-effort milestones at the latest of their predecessors."""
    cal = schedule.calendar
    dates: dict[str, date] = {}
    for mid in ctx.graph.topological_order():
        m = ctx.milestones[mid]
        effort = ctx.effort(mid)
        if m.hard_date is not None:
            dates[mid] = m.hard_date
            continue
        if effort > 0:
            pl = schedule.placements.get(mid)
            if pl is None or pl.total != effort:
                raise UnscheduledMilestone(
                    f"{mid}: work package is not completely placed")
            dates[mid] = cal.week_end(pl.due_week)
        elif m.commitment_date is not None:
            dates[mid] = m.commitment_date
        else:
            preds = ctx.graph.predecessors(mid)
            dates[mid] = max((dates[p] for p in preds), default=cal.start_date)
    return dates


# --------------------------------------------------------------------------
# automatic packing
# --------------------------------------------------------------------------

def _check_cancel(cancel: CancelCheck | None) -> None:
    if cancel is not None and cancel():
        raise CancelledRun("auto-schedule run cancelled")


def _infeasible_violation(ctx: PackContext, schedule: Schedule, mid: str,
                          anchor: int, leftover: Fraction) -> Violation:
    pl = schedule.placements.get(mid)
    placed_late = _ZERO
    due = 0
    if pl is not None and pl.hours_by_week:
        due = pl.due_week
        placed_late = sum((h for w, h in pl.hours_by_week.items() if w > anchor), _ZERO)
    shortfall = placed_late + leftover
    earliest = due if leftover == 0 else 0  # 0: not achievable within the horizon
    cal = schedule.calendar
    when = cal.week_end(earliest).isoformat() if 1 <= earliest <= cal.horizon_weeks else ""
    return violation(
        "infeasible",
        f"{mid}: anchor week {anchor} cannot be met; earliest feasible week is "
        f"{earliest if earliest else 'beyond the horizon'}",
        subject=mid,
        milestone=mid,
        shortfall_hours=shortfall,
        earliest_feasible_week=earliest,
        earliest_feasible_date=when,
        anchor_week=anchor,
    )


def auto_schedule(ctx: PackContext, pool_hours, *, buffers: Iterable[Buffer] = (),
                  cancel: CancelCheck | None = None,
                  forward_priority: Iterable[str] | None = None) -> Schedule:
    """Pack every work package onto the grid; deterministic for equal inputs.

    Order: crosscutting spread, anchored packages backward from their
    anchors, remaining packages forward in topological order (optionally
    starting with ``forward_priority``), then finish-to-finish repair by
    shifting successors' final weeks later. Unmeetable hard anchors yield a
    relaxed placement plus an ``infeasible`` violation with the shortfall and
    earliest feasible week.
    """
    sched = Schedule(calendar=ctx.calendar, buffers=[b.copy() for b in buffers])
    anchor_hard_milestones(sched, ctx.milestones.values())
    spread_crosscutting(sched, pool_hours)
    grid = _Grid(sched)
    topo = ctx.graph.topological_order()
    topo_index = {mid: i for i, mid in enumerate(topo)}
    priority = [mid for mid in (forward_priority or ()) if ctx.effort(mid) > 0]

    hard_ids = [mid for mid in topo
                if mid in sched.anchors and ctx.effort(mid) > 0 and mid not in priority]
    soft_ids = [mid for mid in topo
                if mid not in sched.anchors and ctx.effort(mid) > 0 and mid not in priority]
    fill_order = priority + soft_ids

    leftovers: dict[str, Fraction] = {}
    extra: list[Violation] = []

    def cap_of(mid: str) -> Fraction | None:
        c = ctx.constraints.get(mid)
        return c.max_weekly_hours if c else None

    def is_contiguous(mid: str) -> bool:
        c = ctx.constraints.get(mid)
        return bool(c and c.contiguous)

    # anchored packages, right-aligned: latest gate first, then earliest
    # anchor, then topological position, so nested windows pack exactly
    def _phase_a_key(mid: str):
        window = _window_start(ctx, sched, mid, static_only=True) or 1
        return (-window, sched.anchors[mid], topo_index[mid])

    for mid in sorted(hard_ids, key=_phase_a_key):
        _check_cancel(cancel)
        window = _window_start(ctx, sched, mid, static_only=True) or 1
        hours, left = _backward_fill(grid, ctx.effort(mid),
                                     end=sched.anchors[mid], floor=window, cap=cap_of(mid))
        sched.placements[mid] = Placement(mid, hours)
        leftovers[mid] = left

    def _fill_forward_package(mid: str) -> None:
        _check_cancel(cancel)
        window = _window_start(ctx, sched, mid)
        if window is None:
            window = 1
            extra.append(violation("constraint_violation",
                                   f"{mid}: not_before gate unresolved during packing",
                                   severity=SEVERITY_WARNING, subject=mid, kind="not_before"))
        floor = _ff_floor(ctx, sched, mid)
        effort = ctx.effort(mid)
        if is_contiguous(mid):
            hours = _contiguous_fill(grid, effort, start=window, cap=cap_of(mid), due_floor=floor)
            if hours is not None:
                sched.placements[mid] = Placement(mid, hours)
                leftovers[mid] = _ZERO
                return
            extra.append(violation("constraint_violation",
                                   f"{mid}: no contiguous timebox fits; placed with gaps",
                                   subject=mid, kind="contiguous"))
        hours, left = _forward_fill(grid, effort, start=window, cap=cap_of(mid))
        pl = Placement(mid, hours)
        sched.placements[mid] = pl
        leftovers[mid] = left
        if left > 0:
            extra.append(violation("horizon_exceeded",
                                   f"{mid}: {fmt_hours(left)} h do not fit within the horizon",
                                   subject=mid, leftover=left))
            return
        if pl.hours_by_week and not _shift_tail(grid, pl, floor=floor, cap=cap_of(mid)):
            extra.append(violation("dependency_order",
                                   f"{mid}: no free week at or after week {floor} to honor "
                                   f"finish-to-finish ordering", subject=mid))

    for mid in fill_order:
        _fill_forward_package(mid)

    # repair loop: relax anchored packages whose gate, ordering or anchor
    # broke once everything else landed; sweep soft successors afterwards
    infeasible: dict[str, Violation] = {}
    for _ in range(len(topo) + 2):
        changed = False
        for mid in [m for m in topo if m in sched.anchors and ctx.effort(m) > 0]:
            _check_cancel(cancel)
            anchor = sched.anchors[mid]
            pl = sched.placements[mid]
            window = _window_start(ctx, sched, mid, static_only=True)
            if window is None:
                window = 1
            floor = _ff_floor(ctx, sched, mid)
            ok = (leftovers.get(mid, _ZERO) == 0
                  and pl.hours_by_week
                  and pl.start_week >= window
                  and pl.due_week >= floor
                  and pl.due_week <= anchor)
            if ok:
                infeasible.pop(mid, None)
                continue
            grid.give_map(pl.hours_by_week)
            if is_contiguous(mid):
                hours = _contiguous_fill(grid, ctx.effort(mid), start=window,
                                         cap=cap_of(mid), due_floor=floor)
                if hours is not None:
                    new_pl = Placement(mid, hours)
                    left = _ZERO
                else:
                    hours, left = _forward_fill(grid, ctx.effort(mid), start=window, cap=cap_of(mid))
                    new_pl = Placement(mid, hours)
            else:
                hours, left = _forward_fill(grid, ctx.effort(mid), start=window, cap=cap_of(mid))
                new_pl = Placement(mid, hours)
            if left == 0 and new_pl.hours_by_week:
                _shift_tail(grid, new_pl, floor=floor, cap=cap_of(mid))
            sched.placements[mid] = new_pl
            leftovers[mid] = left
            changed = True
            if left > 0 or not new_pl.hours_by_week or new_pl.due_week > anchor:
                infeasible[mid] = _infeasible_violation(ctx, sched, mid, anchor, left)
            else:
                infeasible.pop(mid, None)
        # soft successors may now trail their (possibly relaxed) predecessors
        for mid in fill_order:
            pl = sched.placements.get(mid)
            if pl is None or not pl.hours_by_week or leftovers.get(mid, _ZERO) > 0:
                continue
            floor = _ff_floor(ctx, sched, mid)
            if pl.due_week < floor:
                if is_contiguous(mid):
                    grid.give_map(pl.hours_by_week)
                    hours = _contiguous_fill(grid, ctx.effort(mid),
                                             start=_window_start(ctx, sched, mid) or 1,
                                             cap=cap_of(mid), due_floor=floor)
                    if hours is None:
                        grid.take_map(pl.hours_by_week)  # keep the old shape
                        extra.append(violation("dependency_order",
                                               f"{mid}: cannot restore ordering contiguously",
                                               subject=mid))
                        continue
                    sched.placements[mid] = Placement(mid, hours)
                    changed = True
                elif _shift_tail(grid, pl, floor=floor, cap=cap_of(mid)):
                    changed = True
                else:
                    extra.append(violation("dependency_order",
                                           f"{mid}: no free week at or after week {floor} to honor "
                                           f"finish-to-finish ordering", subject=mid))
        if not changed:
            break

    ordered = [infeasible[mid] for mid in topo if mid in infeasible]
    seen: set[tuple] = set()
    deduped: list[Violation] = []
    for v in ordered + extra:
        key = (v.code, v.subject, v.message)
        if key not in seen:
            seen.add(key)
            deduped.append(v)
    sched.violations = tuple(deduped)
    return sched


def earliest_completion(ctx: PackContext, pool_hours, milestone_id: str,
                        *, buffers: Iterable[Buffer] = (),
                        cancel: CancelCheck | None = None) -> int:
    """Greedy earliest due week for one milestone, in the context of all
    other project work.

    The milestone's prerequisite chain (graph predecessors plus start-gate
    references) is filled first, right after crosscutting and the unrelated
    hard anchors, and the milestone itself fills forward immediately after.
    This is a greedy bound, not a proven optimum.
    """
    if milestone_id not in ctx.milestones:
        raise UnknownMilestone(f"milestone {milestone_id!r} does not exist")
    if ctx.effort(milestone_id) <= 0:
        sched = auto_schedule(ctx, pool_hours, buffers=buffers, cancel=cancel)
        due = effective_due_week(ctx, sched, milestone_id)
        return due or 0

    closure: set[str] = set()
    frontier = [milestone_id]
    while frontier:
        mid = frontier.pop()
        if mid in closure:
            continue
        closure.add(mid)
        frontier.extend(ctx.graph.predecessors(mid))
        c = ctx.constraints.get(mid)
        if c is not None and c.not_before_milestone is not None:
            frontier.append(c.not_before_milestone)
    topo = ctx.graph.topological_order()
    priority = [mid for mid in topo if mid in closure]

    sched = auto_schedule(ctx, pool_hours, buffers=buffers, cancel=cancel,
                          forward_priority=priority)
    pl = sched.placements.get(milestone_id)
    if pl is None or not pl.hours_by_week or pl.total != ctx.effort(milestone_id):
        raise InfeasibleSchedule(
            f"{milestone_id}: work package does not fit within the horizon")
    return pl.due_week
