"""Plan aggregate: backlog + milestone graph + matrix + calendar + schedule.

One Plan value is the unit of persistence, what-if copying and API exchange.
``dumps``/``loads`` define the canonical JSON file format shared by the CLI,
the store and the HTTP service.
"""

from __future__ import annotations

import json
from datetime import date
from fractions import Fraction

from .backlog import Backlog, BacklogItem
from .document import MilestonePlanDocument, assemble_plan
from .effort import as_hours
from .errors import (
    PlanError,
    PlanFormatError,
    UnknownMilestone,
    ValidationRejected,
    Violation,
    errors_only,
)
from .matrix import AllocationMatrix
from .milestones import Dependency, Milestone, MilestoneGraph
from .schedule import (
    Buffer,
    CancelCheck,
    PackContext,
    Placement,
    Schedule,
    WorkPackageConstraint,
    anchor_hard_milestones,
    auto_schedule,
    derive_due_dates,
    earliest_completion,
    place,
    remove_placement,
    spread_crosscutting,
    validate_schedule,
)
from .timegrid import Calendar

PLAN_SCHEMA = "milestone-plan/1"


class Plan:
    def __init__(self, name: str = "", calendar: Calendar | None = None):
        self.name = name
        self.backlog = Backlog()
        self.graph = MilestoneGraph()
        self.matrix = AllocationMatrix()
        self.calendar = calendar
        self.constraints: dict[str, WorkPackageConstraint] = {}
        self.schedule: Schedule | None = None
        self.document: MilestonePlanDocument | None = None

    # --- structural mutation -------------------------------------------

    def add_backlog_item(self, parent_id: str | None, item: BacklogItem) -> str:
        return self.backlog.add_item(parent_id, item)

    def add_milestone(self, milestone: Milestone) -> str:
        return self.graph.add_milestone(milestone)

    def add_dependency(self, predecessor: str, successor: str) -> Dependency:
        return self.graph.add_dependency(predecessor, successor)

    def allocate(self, item_id: str, milestone_id: str, hours) -> Fraction:
        return self.matrix.allocate(self.backlog, self.graph, item_id, milestone_id, hours)

    def deallocate(self, item_id: str, milestone_id: str, hours=None) -> None:
        self.matrix.deallocate(item_id, milestone_id, hours)

    def set_calendar(self, calendar: Calendar) -> None:
        self.calendar = calendar

    def set_constraint(self, constraint: WorkPackageConstraint) -> None:
        if constraint.milestone_id not in self.graph:
            raise UnknownMilestone(f"milestone {constraint.milestone_id!r} does not exist")
        if (constraint.not_before_milestone is not None
                and constraint.not_before_milestone not in self.graph):
            raise UnknownMilestone(
                f"not_before references unknown milestone {constraint.not_before_milestone!r}")
        self.constraints[constraint.milestone_id] = constraint

    def clear_constraint(self, milestone_id: str) -> None:
        self.constraints.pop(milestone_id, None)

    # --- derived views ---------------------------------------------------

    def package_efforts(self) -> dict[str, Fraction]:
        return self.matrix.package_efforts(self.graph)

    def crosscutting_pool(self) -> Fraction:
        return self.matrix.crosscutting_pool(self.backlog)

    def pack_context(self) -> PackContext:
        if self.calendar is None:
            raise PlanError("plan has no calendar; set one before scheduling")
        return PackContext(
            calendar=self.calendar,
            milestones={m.id: m for m in self.graph.milestones()},
            graph=self.graph,
            package_efforts=self.package_efforts(),
            constraints=dict(self.constraints),
        )

    # --- scheduling ------------------------------------------------------

    def ensure_schedule(self) -> Schedule:
        """Existing schedule, or a fresh anchored empty one."""
        if self.schedule is None:
            if self.calendar is None:
                raise PlanError("plan has no calendar; set one before scheduling")
            sched = Schedule(calendar=self.calendar)
            anchor_hard_milestones(sched, self.graph.milestones())
            self.schedule = sched
        return self.schedule

    def place(self, milestone_id: str, hours_by_week, *, finalize: bool = True) -> Schedule:
        sched = self.ensure_schedule()
        return place(self.pack_context(), sched, milestone_id, hours_by_week, finalize=finalize)

    def remove_placement(self, milestone_id: str) -> Schedule:
        return remove_placement(self.ensure_schedule(), milestone_id)

    def spread_crosscutting(self) -> Schedule:
        sched = self.ensure_schedule()
        return spread_crosscutting(sched, self.crosscutting_pool())

    def auto_schedule(self, *, cancel: CancelCheck | None = None) -> Schedule:
        """Pack a fresh schedule; existing buffers are preserved, the rest is
        rebuilt. The result is returned, not committed onto the plan."""
        self.require_schedulable()
        buffers = self.schedule.buffers if self.schedule is not None else ()
        return auto_schedule(self.pack_context(), self.crosscutting_pool(),
                             buffers=buffers, cancel=cancel)

    def earliest_completion(self, milestone_id: str, *, cancel: CancelCheck | None = None) -> int:
        self.require_schedulable()
        buffers = self.schedule.buffers if self.schedule is not None else ()
        return earliest_completion(self.pack_context(), self.crosscutting_pool(),
                                   milestone_id, buffers=buffers, cancel=cancel)

    def derive_due_dates(self) -> dict[str, date]:
        if self.schedule is None:
            raise PlanError("plan has no schedule; place work or run auto-schedule first")
        return derive_due_dates(self.pack_context(), self.schedule)

    def assemble_document(self, provenance: str = "", as_of: date | None = None) -> MilestonePlanDocument:
        dates = self.derive_due_dates()
        if not provenance:
            provenance = self.schedule_fingerprint()
        return assemble_plan(self.graph, dates, provenance=provenance, as_of=as_of)

    def schedule_fingerprint(self) -> str:
        """Content hash tying a document to the schedule that produced it."""
        import hashlib

        if self.schedule is None:
            return ""
        blob = json.dumps(self.schedule.to_json_dict(), sort_keys=True).encode()
        return "sha256:" + hashlib.sha256(blob).hexdigest()[:16]

    # --- validation ------------------------------------------------------

    def validate_backlog(self) -> list[Violation]:
        return self.backlog.validate()

    def validate_matrix(self) -> list[Violation]:
        return self.matrix.validate(self.backlog, self.graph)

    def validate_schedule(self) -> list[Violation]:
        if self.schedule is None:
            return []
        return validate_schedule(self.pack_context(), self.schedule, self.crosscutting_pool())

    def validate(self) -> list[Violation]:
        """Every rule across all parts; schedule rules only once one exists."""
        out = self.validate_backlog()
        out += self.validate_matrix()
        if not self.graph.is_acyclic():
            from .errors import violation

            out.append(violation("cyclic_graph", "milestone graph contains a cycle"))
        if self.schedule is not None and self.calendar is not None:
            out += self.validate_schedule()
        return out

    def require_schedulable(self) -> None:
        """Structural validity needed before packing; raises with the findings."""
        findings = errors_only(self.validate_backlog() + self.validate_matrix())
        if not self.graph.is_acyclic():
            raise ValidationRejected("milestone graph contains a cycle", violations=[])
        if findings:
            raise ValidationRejected(
                "plan has structural errors; fix them before scheduling", violations=findings)
        if self.calendar is None:
            raise PlanError("plan has no calendar; set one before scheduling")

    # --- serialization ---------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "schema": PLAN_SCHEMA,
            "name": self.name,
            "calendar": self.calendar.to_json_dict() if self.calendar else None,
            "backlog": self.backlog.to_json_list(),
            "milestones": [m.to_json_dict() for m in self.graph.milestones()],
            "dependencies": [e.to_json_dict() for e in self.graph.dependencies()],
            "allocations": self.matrix.to_json_list(),
            "constraints": [c.to_json_dict() for c in self.constraints.values()],
            "schedule": self.schedule.to_json_dict() if self.schedule else None,
            "document": self.document.to_json_dict() if self.document else None,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Plan":
        if not isinstance(d, dict) or d.get("schema") != PLAN_SCHEMA:
            raise PlanFormatError(f"not a {PLAN_SCHEMA} document")
        plan = cls(name=d.get("name", ""))
        if d.get("calendar"):
            plan.calendar = Calendar.from_json_dict(d["calendar"])
        plan.backlog = Backlog.from_json_list(d.get("backlog", []))
        plan.graph = MilestoneGraph.from_json_dict(
            {"milestones": d.get("milestones", []), "dependencies": d.get("dependencies", [])})
        plan.matrix = AllocationMatrix.from_json_list(d.get("allocations", []))
        for rec in d.get("constraints", []):
            c = WorkPackageConstraint.from_json_dict(rec)
            plan.constraints[c.milestone_id] = c
        if d.get("schedule") is not None:
            if plan.calendar is None:
                raise PlanFormatError("schedule present but no calendar")
            plan.schedule = Schedule.from_json_dict(d["schedule"], plan.calendar)
        if d.get("document") is not None:
            plan.document = MilestonePlanDocument.from_json_dict(d["document"])
        return plan

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Plan":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PlanFormatError(f"invalid JSON: {exc}") from exc
        return cls.from_json_dict(data)

    def clone(self) -> "Plan":
        return Plan.from_json_dict(self.to_json_dict())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Plan):
            return NotImplemented
        return self.to_json_dict() == other.to_json_dict()
