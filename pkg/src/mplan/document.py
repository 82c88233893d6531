"""The deliverable milestone plan: one row per milestone, dates and status.

Planned dates are derived state (they change only by re-planning); forecast
dates and statuses are execution annotations layered on top. Updates are
append-only: every revision keeps the prior row set recoverable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date
from enum import Enum

from .errors import CompletedWithoutDate, UnknownRow
from .milestones import MilestoneGraph, Responsible

_MONTHS = ["Jan", "Feb", "Mar", "Apr", "May", "Jun",
           "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"]


def short_date(d: date) -> str:
    """Fig-style compact date, e.g. ``Oct 1``."""
    return f"{_MONTHS[d.month - 1]} {d.day}"


class RowStatus(str, Enum):
    COMPLETED = "completed"
    IN_PROGRESS = "in_progress"
    NOT_STARTED = "not_started"


_STATUS_MARK = {RowStatus.COMPLETED: "C", RowStatus.IN_PROGRESS: "P", RowStatus.NOT_STARTED: ""}


@dataclass(frozen=True)
class PlanRow:
    milestone_id: str
    planned_date: date
    forecast_date: date | None
    status: RowStatus
    responsible: Responsible | None
    hard: bool
    description: str

    def to_json_dict(self) -> dict:
        return {
            "milestone_id": self.milestone_id,
            "planned_date": self.planned_date.isoformat(),
            "forecast_date": self.forecast_date.isoformat() if self.forecast_date else None,
            "status": self.status.value,
            "responsible": self.responsible.value if self.responsible else None,
            "hard": self.hard,
            "description": self.description,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "PlanRow":
        return cls(
            milestone_id=d["milestone_id"],
            planned_date=date.fromisoformat(d["planned_date"]),
            forecast_date=date.fromisoformat(d["forecast_date"]) if d.get("forecast_date") else None,
            status=RowStatus(d.get("status", "not_started")),
            responsible=Responsible(d["responsible"]) if d.get("responsible") else None,
            hard=bool(d.get("hard", False)),
            description=d.get("description", ""),
        )


@dataclass(frozen=True)
class DocumentRevision:
    """One retained prior state: the rows as they stood, and when."""

    rows: tuple[PlanRow, ...]
    as_of: date | None

    def to_json_dict(self) -> dict:
        return {
            "rows": [r.to_json_dict() for r in self.rows],
            "as_of": self.as_of.isoformat() if self.as_of else None,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "DocumentRevision":
        return cls(
            rows=tuple(PlanRow.from_json_dict(r) for r in d.get("rows", [])),
            as_of=date.fromisoformat(d["as_of"]) if d.get("as_of") else None,
        )


@dataclass(frozen=True)
class MilestonePlanDocument:
    rows: tuple[PlanRow, ...]
    as_of: date | None = None
    provenance: str = ""
    history: tuple[DocumentRevision, ...] = ()

    def row(self, milestone_id: str) -> PlanRow:
        for r in self.rows:
            if r.milestone_id == milestone_id:
                return r
        raise UnknownRow(f"no plan row for milestone {milestone_id!r}")

    def to_json_dict(self) -> dict:
        return {
            "schema": "milestone-plan-document/1",
            "as_of": self.as_of.isoformat() if self.as_of else None,
            "provenance": self.provenance,
            "rows": [r.to_json_dict() for r in self.rows],
            "history": [h.to_json_dict() for h in self.history],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "MilestonePlanDocument":
        return cls(
            rows=tuple(PlanRow.from_json_dict(r) for r in d.get("rows", [])),
            as_of=date.fromisoformat(d["as_of"]) if d.get("as_of") else None,
            provenance=d.get("provenance", ""),
            history=tuple(DocumentRevision.from_json_dict(h) for h in d.get("history", [])),
        )


def assemble_plan(graph: MilestoneGraph, due_dates: dict[str, date],
                  provenance: str = "", as_of: date | None = None) -> MilestonePlanDocument:
    """Build the document from derived dates: rows in topological order,
    everything not started, forecasts empty."""
    rows = []
    for mid in graph.topological_order():
        m = graph.milestone(mid)
        rows.append(PlanRow(
            milestone_id=mid,
            planned_date=due_dates[mid],
            forecast_date=None,
            status=RowStatus.NOT_STARTED,
            responsible=m.responsible,
            hard=m.hard_date is not None,
            description=m.name,
        ))
    return MilestonePlanDocument(rows=tuple(rows), as_of=as_of, provenance=provenance)


def update_status(document: MilestonePlanDocument, milestone_id: str, status: RowStatus,
                  forecast_date: date | None = None,
                  as_of: date | None = None) -> MilestonePlanDocument:
    """Record execution progress on one row; returns a new document whose
    history keeps the previous revision. Completion requires the actual
    date, which lands in the forecast column."""
    status = RowStatus(status)
    if status is RowStatus.COMPLETED and forecast_date is None:
        raise CompletedWithoutDate(f"{milestone_id}: completing a row needs its completion date")
    found = False
    new_rows = []
    for r in document.rows:
        if r.milestone_id == milestone_id:
            found = True
            new_rows.append(replace(r, status=status,
                                    forecast_date=forecast_date if forecast_date else r.forecast_date))
        else:
            new_rows.append(r)
    if not found:
        raise UnknownRow(f"no plan row for milestone {milestone_id!r}")
    revision = DocumentRevision(rows=document.rows, as_of=document.as_of)
    return MilestonePlanDocument(
        rows=tuple(new_rows),
        as_of=as_of if as_of is not None else forecast_date or document.as_of,
        provenance=document.provenance,
        history=document.history + (revision,),
    )


def render_text_table(document: MilestonePlanDocument) -> str:
    """Fixed-width table mirroring the classic plan layout."""
    header = ["", "State", "Planned date", "Forecasted date", "Team", "Client", "Description"]
    body: list[list[str]] = []
    for r in document.rows:
        team = "X" if r.responsible in (Responsible.TEAM, Responsible.JOINT) else ""
        client = "X" if r.responsible in (Responsible.CLIENT, Responsible.JOINT) else ""
        body.append([
            "●" if r.hard else "○",
            _STATUS_MARK[r.status],
            short_date(r.planned_date),
            short_date(r.forecast_date) if r.forecast_date else "",
            team,
            client,
            r.description,
        ])
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    lines = []
    for row in [header] + body:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    lines.append("")
    lines.append("State: C - Completed, P - In progress, blank - Not started")
    lines.append("● hard milestone   ○ soft milestone")
    return "\n".join(lines) + "\n"


def render(document: MilestonePlanDocument, fmt: str = "text_table") -> bytes:
    """Serialize the document: ``text_table``, lossless ``json``, or ``svg``."""
    if fmt == "text_table":
        return render_text_table(document).encode("utf-8")
    if fmt == "json":
        import json

        return (json.dumps(document.to_json_dict(), indent=2) + "\n").encode("utf-8")
    if fmt == "svg":
        from .render import document_svg_bytes

        return document_svg_bytes(document)
    raise ValueError(f"unknown render format {fmt!r}")
