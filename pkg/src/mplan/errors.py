"""Engine errors and the violation record shared by all validators.

Errors are raised for operations that must be rejected atomically; validators
return lists of :class:`Violation` instead of raising, so a partially built
plan can always be inspected.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class PlanError(Exception):
    """Base class for engine errors; ``code`` is stable across releases."""

    code = "plan_error"

    def __init__(self, message: str, **details: object):
        super().__init__(message)
        self.message = message
        self.details = details


# --- backlog ---
class ItemNotFound(PlanError):
    code = "item_not_found"


class ParentNotFound(PlanError):
    code = "parent_not_found"


class DuplicateId(PlanError):
    code = "duplicate_id"


class BadWbsCode(PlanError):
    code = "bad_wbs_code"


class ParentHasLeafEffort(PlanError):
    code = "parent_has_leaf_effort"


# --- milestone graph ---
class UnknownMilestone(PlanError):
    code = "unknown_milestone"


class DuplicateMilestoneName(PlanError):
    code = "duplicate_milestone_name"


class BadMilestoneDate(PlanError):
    code = "bad_milestone_date"


class DuplicateDependency(PlanError):
    code = "duplicate_dependency"


class WouldCreateCycle(PlanError):
    code = "would_create_cycle"

    def __init__(self, message: str, cycle: list[str]):
        super().__init__(message, cycle=list(cycle))
        self.cycle = list(cycle)


class CyclicGraph(PlanError):
    code = "cyclic_graph"


# --- allocation matrix ---
class UnknownItem(PlanError):
    code = "unknown_item"


class NotALeaf(PlanError):
    code = "not_a_leaf"


class InvalidAllocation(PlanError):
    code = "invalid_allocation"


class OverAllocation(PlanError):
    code = "over_allocation"

    def __init__(self, message: str, remaining):
        super().__init__(message, remaining=str(remaining))
        self.remaining = remaining


# --- schedule ---
class WeekOutOfHorizon(PlanError):
    code = "week_out_of_horizon"


class HardDateBeyondHorizon(PlanError):
    code = "hard_date_beyond_horizon"


class HardDateInPast(PlanError):
    code = "hard_date_in_past"


class PoolExceedsCapacity(PlanError):
    code = "pool_exceeds_capacity"


class NoWorkPackage(PlanError):
    code = "no_work_package"


class CapacityExceeded(PlanError):
    code = "capacity_exceeded"

    def __init__(self, message: str, week: int, overflow):
        super().__init__(message, week=week, overflow=str(overflow))
        self.week = week
        self.overflow = overflow


class BlackoutViolation(PlanError):
    code = "blackout_violation"

    def __init__(self, message: str, week: int):
        super().__init__(message, week=week)
        self.week = week


class ConstraintViolation(PlanError):
    code = "constraint_violation"

    def __init__(self, message: str, kind: str):
        super().__init__(message, kind=kind)
        self.kind = kind


class AnchorViolation(PlanError):
    code = "anchor_violation"


class EffortMismatch(PlanError):
    code = "effort_mismatch"


class InfeasibleSchedule(PlanError):
    code = "infeasible"


class UnscheduledMilestone(PlanError):
    code = "unscheduled_milestone"


class CancelledRun(PlanError):
    code = "cancelled"


# --- plan document ---
class UnknownRow(PlanError):
    code = "unknown_row"


class CompletedWithoutDate(PlanError):
    code = "completed_without_date"


# --- persistence / service ---
class StorageFailure(PlanError):
    code = "storage_failure"


class ValidationRejected(PlanError):
    code = "validation_rejected"

    def __init__(self, message: str, violations):
        super().__init__(message)
        self.violations = list(violations)


class VersionConflict(PlanError):
    code = "version_conflict"


class UnknownPlan(PlanError):
    code = "unknown_plan"


class UnknownSession(PlanError):
    code = "unknown_session"


class PlanFormatError(PlanError):
    code = "plan_format_error"


SEVERITY_ERROR = "error"
SEVERITY_WARNING = "warning"


@dataclass(frozen=True)
class Violation:
    """One broken rule, naming the subject and carrying string-typed details."""

    code: str
    message: str
    severity: str = SEVERITY_ERROR
    subject: str | None = None
    details: tuple[tuple[str, str], ...] = ()

    def detail(self, key: str) -> str | None:
        for k, v in self.details:
            if k == key:
                return v
        return None

    def to_json_dict(self) -> dict:
        return {
            "code": self.code,
            "message": self.message,
            "severity": self.severity,
            "subject": self.subject,
            "details": {k: v for k, v in self.details},
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Violation":
        return cls(
            code=d["code"],
            message=d["message"],
            severity=d.get("severity", SEVERITY_ERROR),
            subject=d.get("subject"),
            details=tuple(sorted((str(k), str(v)) for k, v in (d.get("details") or {}).items())),
        )


def violation(code: str, message: str, *, severity: str = SEVERITY_ERROR,
              subject: str | None = None, **details: object) -> Violation:
    """Build a :class:`Violation` with details coerced to strings."""
    return Violation(
        code=code,
        message=message,
        severity=severity,
        subject=subject,
        details=tuple((k, str(v)) for k, v in details.items()),
    )


def errors_only(violations) -> list[Violation]:
    return [v for v in violations if v.severity == SEVERITY_ERROR]
