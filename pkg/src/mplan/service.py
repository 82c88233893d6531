"""HTTP JSON API over the planning engine.

Serves plans from a :class:`PlanStore` with optimistic concurrency: every
mutation carries the ``base_version`` it was computed against and gets a 409
when that version is stale. What-if sessions hold an uncommitted overlay
copy of a plan; committing turns the overlay into a new version atomically,
discarding throws it away. Validation failures return 400 with the engine's
violation list verbatim.
"""

from __future__ import annotations

import secrets
import threading
from datetime import date
from typing import Any, Callable

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .backlog import BacklogItem, ItemKind
from .document import RowStatus, update_status
from .errors import (
    PlanError,
    UnknownPlan,
    UnknownSession,
    ValidationRejected,
    VersionConflict,
)
from .effort import hours_to_json
from .milestones import Milestone
from .plan import Plan
from .schedule import WorkPackageConstraint
from .store import PlanStore
from .timegrid import Calendar

_STATUS_BY_CODE = {
    "unknown_plan": 404,
    "unknown_session": 404,
    "version_conflict": 409,
}


class ItemIn(BaseModel):
    id: str
    wbs_code: str
    name: str
    kind: str = "story"
    effort_hours: int | float | str | None = None
    crosscutting: bool = False
    parent_id: str | None = None


class MilestoneIn(BaseModel):
    id: str
    name: str
    kind: str = "soft"
    hard_date: str | None = None
    commitment_date: str | None = None
    completion_criteria: str = ""
    rationale: str = ""
    responsible: str | None = None


class DependencyIn(BaseModel):
    predecessor: str
    successor: str


class AllocationIn(BaseModel):
    item_id: str
    milestone_id: str
    hours: int | float | str


class CalendarIn(BaseModel):
    start_date: str
    horizon_weeks: int
    fte_count: int | float | str
    hours_per_fte_week: int | float | str = 40
    blackout_weeks: list[int] = Field(default_factory=list)


class ConstraintIn(BaseModel):
    max_weekly_hours: int | float | str | None = None
    not_before_milestone: str | None = None
    not_before_date: str | None = None
    contiguous: bool = False


class PlacementIn(BaseModel):
    hours_by_week: dict[str, int | float | str]
    finalize: bool = True


class StatusIn(BaseModel):
    milestone_id: str
    status: str
    forecast_date: str | None = None
    as_of: str | None = None


class PlanCreateIn(BaseModel):
    plan_id: str | None = None
    plan: dict | None = None
    name: str = ""


class SessionIn(BaseModel):
    base_version: int | None = None


class Versioned(BaseModel):
    base_version: int


class _Session:
    def __init__(self, session_id: str, plan_id: str, base_version: int, plan: Plan):
        self.session_id = session_id
        self.plan_id = plan_id
        self.base_version = base_version
        self.plan = plan


def _plan_payload(plan: Plan) -> dict:
    return plan.to_json_dict()


def _violations_payload(violations) -> list[dict]:
    return [v.to_json_dict() for v in violations]


def _matrix_payload(plan: Plan) -> dict:
    table = plan.matrix.to_table(plan.backlog, plan.graph)
    efforts = plan.package_efforts()
    return {
        "header": table[0],
        "rows": table[1:-1],
        "totals": table[-1],
        "milestone_order": plan.graph.topological_order(),
        "package_efforts": {mid: hours_to_json(h) for mid, h in efforts.items()},
        "crosscutting_pool": hours_to_json(plan.crosscutting_pool()),
        "total_effort": hours_to_json(plan.backlog.total_effort()),
        "row_remaining": {
            leaf.id: hours_to_json(plan.backlog.rollup_effort(leaf.id) - plan.matrix.row_total(leaf.id))
            for leaf in plan.backlog.leaves()
        },
    }


def _schedule_payload(plan: Plan) -> dict | None:
    if plan.schedule is None:
        return None
    payload = plan.schedule.to_json_dict()
    payload["package_efforts"] = {mid: hours_to_json(h) for mid, h in plan.package_efforts().items()}
    return payload


def create_app(store: PlanStore) -> FastAPI:
    app = FastAPI(title="mplan service", version="0.1.0")
    sessions: dict[str, _Session] = {}
    sessions_lock = threading.Lock()

    @app.exception_handler(PlanError)
    async def _plan_error_handler(_: Request, exc: PlanError):
        status = _STATUS_BY_CODE.get(exc.code, 400)
        body: dict[str, Any] = {"error": exc.code, "message": str(exc)}
        if isinstance(exc, ValidationRejected):
            body["violations"] = _violations_payload(exc.violations)
        elif exc.details:
            body["details"] = {k: str(v) for k, v in exc.details.items()}
        return JSONResponse(status_code=status, content=body)

    # --- plan-level helpers ----------------------------------------------

    def _mutate(plan_id: str, base_version: int, fn: Callable[[Plan], Any]) -> dict:
        plan, version = store.load(plan_id)
        if base_version != version:
            raise VersionConflict(f"plan {plan_id!r} is at version {version}, not {base_version}")
        result = fn(plan)
        new_version = store.commit(plan_id, base_version, plan)
        out = {"plan_id": plan_id, "version": new_version}
        if isinstance(result, dict):
            out.update(result)
        return out

    def _session(session_id: str) -> _Session:
        with sessions_lock:
            sess = sessions.get(session_id)
        if sess is None:
            raise UnknownSession(f"session {session_id!r} does not exist")
        return sess

    def _apply(plan: Plan, op: str, body) -> Any:
        """One mutation vocabulary shared by plan routes and session routes."""
        if op == "add_item":
            item = BacklogItem(id=body.id, wbs_code=body.wbs_code, name=body.name,
                               kind=ItemKind(body.kind), effort_hours=body.effort_hours,
                               crosscutting=body.crosscutting)
            plan.add_backlog_item(body.parent_id, item)
        elif op == "add_milestone":
            plan.add_milestone(Milestone.from_json_dict(body.model_dump()))
        elif op == "add_dependency":
            plan.add_dependency(body.predecessor, body.successor)
        elif op == "allocate":
            plan.allocate(body.item_id, body.milestone_id, body.hours)
        elif op == "deallocate":
            plan.deallocate(body.item_id, body.milestone_id,
                            body.hours if body.hours != "all" else None)
        elif op == "set_calendar":
            plan.set_calendar(Calendar.from_json_dict(body.model_dump()))
        else:  # pragma: no cover - internal misuse
            raise PlanError(f"unknown op {op!r}")

    def _place(plan: Plan, milestone_id: str, body: PlacementIn) -> None:
        plan.place(milestone_id, body.hours_by_week, finalize=body.finalize)
        plan.spread_crosscutting()

    def _unplace(plan: Plan, milestone_id: str) -> None:
        plan.remove_placement(milestone_id)
        plan.spread_crosscutting()

    def _constraint(plan: Plan, milestone_id: str, body: ConstraintIn) -> None:
        plan.set_constraint(WorkPackageConstraint(
            milestone_id=milestone_id,
            max_weekly_hours=body.max_weekly_hours,
            not_before_milestone=body.not_before_milestone,
            not_before_date=date.fromisoformat(body.not_before_date) if body.not_before_date else None,
            contiguous=body.contiguous,
        ))

    def _auto(plan: Plan) -> dict:
        schedule = plan.auto_schedule()
        plan.schedule = schedule
        plan.document = None
        return {"schedule": _schedule_payload(plan),
                "violations": _violations_payload(schedule.violations)}

    def _dates(plan: Plan) -> dict:
        return {mid: d.isoformat() for mid, d in plan.derive_due_dates().items()}

    def _assemble(plan: Plan) -> dict:
        plan.document = plan.assemble_document()
        return {"document": plan.document.to_json_dict()}

    def _status(plan: Plan, body: StatusIn) -> dict:
        if plan.document is None:
            plan.document = plan.assemble_document()
        plan.document = update_status(
            plan.document, body.milestone_id, RowStatus(body.status),
            forecast_date=date.fromisoformat(body.forecast_date) if body.forecast_date else None,
            as_of=date.fromisoformat(body.as_of) if body.as_of else None,
        )
        return {"document": plan.document.to_json_dict()}

    # --- plans -------------------------------------------------------------

    @app.post("/plans", status_code=201)
    def create_plan(body: PlanCreateIn):
        plan = Plan.from_json_dict(body.plan) if body.plan else Plan(name=body.name)
        plan_id, version = store.create_plan(plan, plan_id=body.plan_id)
        return {"plan_id": plan_id, "version": version}

    @app.get("/plans")
    def list_plans():
        return {"plans": [{"plan_id": pid, "version": store.latest_version(pid)}
                          for pid in store.plan_ids()]}

    @app.get("/plans/{plan_id}")
    def get_plan(plan_id: str, version: int | None = None):
        plan, v = store.load(plan_id, version)
        return {"plan_id": plan_id, "version": v, "plan": _plan_payload(plan)}

    @app.get("/plans/{plan_id}/versions")
    def get_versions(plan_id: str):
        versions = store.versions(plan_id)
        if not versions:
            raise UnknownPlan(f"plan {plan_id!r} does not exist")
        return {"plan_id": plan_id, "versions": versions}

    # --- plan mutations ------------------------------------------------

    class ItemBody(ItemIn, Versioned):
        pass

    class MilestoneBody(MilestoneIn, Versioned):
        pass

    class DependencyBody(DependencyIn, Versioned):
        pass

    class AllocationBody(AllocationIn, Versioned):
        pass

    class DeallocationBody(AllocationIn, Versioned):
        hours: int | float | str = "all"

    class CalendarBody(CalendarIn, Versioned):
        pass

    class ConstraintBody(ConstraintIn, Versioned):
        pass

    class PlacementBody(PlacementIn, Versioned):
        pass

    class StatusBody(StatusIn, Versioned):
        pass

    @app.post("/plans/{plan_id}/backlog/items")
    def add_item(plan_id: str, body: ItemBody):
        return _mutate(plan_id, body.base_version, lambda p: _apply(p, "add_item", body))

    @app.post("/plans/{plan_id}/milestones")
    def add_milestone(plan_id: str, body: MilestoneBody):
        return _mutate(plan_id, body.base_version, lambda p: _apply(p, "add_milestone", body))

    @app.post("/plans/{plan_id}/dependencies")
    def add_dependency(plan_id: str, body: DependencyBody):
        return _mutate(plan_id, body.base_version, lambda p: _apply(p, "add_dependency", body))

    @app.post("/plans/{plan_id}/allocations")
    def allocate(plan_id: str, body: AllocationBody):
        return _mutate(plan_id, body.base_version, lambda p: _apply(p, "allocate", body))

    @app.post("/plans/{plan_id}/allocations/remove")
    def deallocate(plan_id: str, body: DeallocationBody):
        return _mutate(plan_id, body.base_version, lambda p: _apply(p, "deallocate", body))

    @app.put("/plans/{plan_id}/calendar")
    def set_calendar(plan_id: str, body: CalendarBody):
        return _mutate(plan_id, body.base_version, lambda p: _apply(p, "set_calendar", body))

    @app.put("/plans/{plan_id}/constraints/{milestone_id}")
    def set_constraint(plan_id: str, milestone_id: str, body: ConstraintBody):
        return _mutate(plan_id, body.base_version, lambda p: _constraint(p, milestone_id, body))

    @app.put("/plans/{plan_id}/placements/{milestone_id}")
    def put_placement(plan_id: str, milestone_id: str, body: PlacementBody):
        return _mutate(plan_id, body.base_version, lambda p: _place(p, milestone_id, body))

    @app.delete("/plans/{plan_id}/placements/{milestone_id}")
    def delete_placement(plan_id: str, milestone_id: str, base_version: int):
        return _mutate(plan_id, base_version, lambda p: _unplace(p, milestone_id))

    @app.post("/plans/{plan_id}/auto-schedule")
    def auto_schedule_plan(plan_id: str, body: Versioned):
        return _mutate(plan_id, body.base_version, _auto)

    @app.post("/plans/{plan_id}/document/assemble")
    def assemble_document(plan_id: str, body: Versioned):
        return _mutate(plan_id, body.base_version, _assemble)

    @app.post("/plans/{plan_id}/document/status")
    def document_status(plan_id: str, body: StatusBody):
        return _mutate(plan_id, body.base_version, lambda p: _status(p, body))

    # --- plan reads ------------------------------------------------------

    @app.get("/plans/{plan_id}/validate")
    def validate_plan(plan_id: str):
        plan, version = store.load(plan_id)
        return {"plan_id": plan_id, "version": version,
                "violations": _violations_payload(plan.validate())}

    @app.get("/plans/{plan_id}/matrix")
    def get_matrix(plan_id: str):
        plan, version = store.load(plan_id)
        return {"plan_id": plan_id, "version": version, **_matrix_payload(plan)}

    @app.get("/plans/{plan_id}/dates")
    def get_dates(plan_id: str):
        plan, version = store.load(plan_id)
        return {"plan_id": plan_id, "version": version, "dates": _dates(plan)}

    @app.get("/plans/{plan_id}/schedule")
    def get_schedule(plan_id: str):
        plan, version = store.load(plan_id)
        return {"plan_id": plan_id, "version": version, "schedule": _schedule_payload(plan)}

    @app.get("/plans/{plan_id}/document")
    def get_document(plan_id: str):
        plan, version = store.load(plan_id)
        doc = plan.document.to_json_dict() if plan.document else None
        return {"plan_id": plan_id, "version": version, "document": doc}

    # --- what-if sessions --------------------------------------------------

    @app.post("/plans/{plan_id}/sessions", status_code=201)
    def open_session(plan_id: str, body: SessionIn):
        plan, version = store.load(plan_id, body.base_version)
        session_id = secrets.token_hex(8)
        with sessions_lock:
            sessions[session_id] = _Session(session_id, plan_id, version, plan)
        return {"session_id": session_id, "plan_id": plan_id, "base_version": version}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        sess = _session(session_id)
        return {"session_id": session_id, "plan_id": sess.plan_id,
                "base_version": sess.base_version, "plan": _plan_payload(sess.plan)}

    @app.put("/sessions/{session_id}/placements/{milestone_id}")
    def session_place(session_id: str, milestone_id: str, body: PlacementIn):
        sess = _session(session_id)
        _place(sess.plan, milestone_id, body)
        return {"session_id": session_id, "base_version": sess.base_version,
                "schedule": _schedule_payload(sess.plan),
                "violations": _violations_payload(sess.plan.validate_schedule())}

    @app.delete("/sessions/{session_id}/placements/{milestone_id}")
    def session_unplace(session_id: str, milestone_id: str):
        sess = _session(session_id)
        _unplace(sess.plan, milestone_id)
        return {"session_id": session_id, "base_version": sess.base_version,
                "schedule": _schedule_payload(sess.plan)}

    @app.post("/sessions/{session_id}/allocations")
    def session_allocate(session_id: str, body: AllocationIn):
        sess = _session(session_id)
        _apply(sess.plan, "allocate", body)
        return {"session_id": session_id, "base_version": sess.base_version,
                **_matrix_payload(sess.plan)}

    @app.post("/sessions/{session_id}/allocations/remove")
    def session_deallocate(session_id: str, body: AllocationIn):
        sess = _session(session_id)
        _apply(sess.plan, "deallocate", body)
        return {"session_id": session_id, "base_version": sess.base_version,
                **_matrix_payload(sess.plan)}

    @app.post("/sessions/{session_id}/auto-schedule")
    def session_auto(session_id: str):
        sess = _session(session_id)
        result = _auto(sess.plan)
        return {"session_id": session_id, "base_version": sess.base_version, **result}

    @app.get("/sessions/{session_id}/validate")
    def session_validate(session_id: str):
        sess = _session(session_id)
        return {"session_id": session_id, "base_version": sess.base_version,
                "violations": _violations_payload(sess.plan.validate())}

    @app.get("/sessions/{session_id}/dates")
    def session_dates(session_id: str):
        sess = _session(session_id)
        return {"session_id": session_id, "base_version": sess.base_version,
                "dates": _dates(sess.plan)}

    @app.get("/sessions/{session_id}/matrix")
    def session_matrix(session_id: str):
        sess = _session(session_id)
        return {"session_id": session_id, "base_version": sess.base_version,
                **_matrix_payload(sess.plan)}

    @app.get("/sessions/{session_id}/document")
    def session_document(session_id: str):
        sess = _session(session_id)
        doc = sess.plan.assemble_document()
        return {"session_id": session_id, "base_version": sess.base_version,
                "document": doc.to_json_dict()}

    @app.post("/sessions/{session_id}/commit")
    def commit_session(session_id: str):
        sess = _session(session_id)
        version = store.commit(sess.plan_id, sess.base_version, sess.plan)
        with sessions_lock:
            sessions.pop(session_id, None)
        return {"plan_id": sess.plan_id, "version": version}

    @app.delete("/sessions/{session_id}")
    def discard_session(session_id: str):
        sess = _session(session_id)
        with sessions_lock:
            sessions.pop(session_id, None)
        return {"plan_id": sess.plan_id, "discarded": True}

    return app


def serve(store_path: str, host: str = "127.0.0.1", port: int = 8040) -> None:  # pragma: no cover
    import uvicorn

    uvicorn.run(create_app(PlanStore(store_path)), host=host, port=port, log_level="warning")
