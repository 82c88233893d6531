"""Milestone planning engine.

Models a hierarchical product backlog, a finish-to-finish milestone
dependency graph, a milestone planning matrix and a capacity-constrained
work packages schedule; derives, validates and tracks milestone plans.
"""

from .backlog import Backlog, BacklogItem, ItemKind
from .document import MilestonePlanDocument, PlanRow, RowStatus, assemble_plan, render, update_status
from .effort import as_hours, fmt_hours
from .errors import PlanError, Violation
from .matrix import AllocationMatrix
from .milestones import Dependency, Milestone, MilestoneGraph, MilestoneKind, Responsible
from .plan import Plan
from .schedule import (
    Buffer,
    PackContext,
    Placement,
    Schedule,
    WorkPackageConstraint,
    anchor_hard_milestones,
    auto_schedule,
    derive_due_dates,
    earliest_completion,
    place,
    spread_crosscutting,
    validate_schedule,
)
from .timegrid import Calendar

__version__ = "0.1.0"

__all__ = [
    "AllocationMatrix",
    "Backlog",
    "BacklogItem",
    "Buffer",
    "Calendar",
    "Dependency",
    "ItemKind",
    "Milestone",
    "MilestoneGraph",
    "MilestoneKind",
    "MilestonePlanDocument",
    "PackContext",
    "Placement",
    "Plan",
    "PlanError",
    "PlanRow",
    "Responsible",
    "RowStatus",
    "Schedule",
    "Violation",
    "WorkPackageConstraint",
    "anchor_hard_milestones",
    "as_hours",
    "assemble_plan",
    "auto_schedule",
    "derive_due_dates",
    "earliest_completion",
    "fmt_hours",
    "place",
    "render",
    "spread_crosscutting",
    "update_status",
    "validate_schedule",
]
