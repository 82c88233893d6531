"""Figure rendering for the schedule canvas and the plan table.

Both figures are drawn with matplotlib and saved wherever the caller points
them (SVG by default); output is byte-deterministic for identical inputs, so
renders can be diffed and cached.
"""

from __future__ import annotations

import io
from fractions import Fraction

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import Patch, Rectangle

from .document import MilestonePlanDocument, short_date
from .milestones import MilestoneGraph, Responsible
from .schedule import PackContext, Schedule

_RC = {"svg.hashsalt": "mplan", "font.family": "DejaVu Sans"}
_SAVEFIG_KW = {"metadata": {"Date": None}}

# stable qualitative palette; packages cycle through it in topological order
_PALETTE = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948",
    "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#1170aa", "#fc7d0b",
    "#57606c", "#5fa2ce", "#c85200", "#7b848f", "#a3acb9", "#ffbc79",
]
_CROSSCUT_COLOR = "#d9d9d9"
_BUFFER_COLOR = "#f2f2f2"


def _save(fig, target) -> bytes | None:
    """Save to a path or return SVG bytes when no target is given."""
    fig.tight_layout()
    try:
        if target is None:
            buf = io.BytesIO()
            fig.savefig(buf, format="svg", **_SAVEFIG_KW)
            return buf.getvalue()
        fig.savefig(target, **_SAVEFIG_KW)
        return None
    finally:
        plt.close(fig)


def canvas_figure(ctx: PackContext, schedule: Schedule, *, quantum: Fraction = Fraction(40),
                  title: str = "Work Packages Schedule"):
    """Weeks on the horizontal axis, stacked hours on the vertical: shaded
    regions per package, hatched blackout weeks, anchor markers."""
    cal = schedule.calendar
    horizon = cal.horizon_weeks
    top = float(cal.weekly_hours)
    order = ctx.graph.topological_order()
    colors = {mid: _PALETTE[i % len(_PALETTE)] for i, mid in enumerate(order)}

    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(max(8.0, horizon * 0.42), 5.2))
        for w in sorted(cal.blackouts):
            ax.add_patch(Rectangle((w - 1, 0), 1, top, facecolor="#eeeeee",
                                   edgecolor="#bbbbbb", hatch="///", zorder=0))
        for w in range(1, horizon + 1):
            stack = 0.0
            cross = schedule.crosscutting_profile.get(w)
            if cross:
                h = float(cross)
                ax.add_patch(Rectangle((w - 1, stack), 1, h, facecolor=_CROSSCUT_COLOR,
                                       edgecolor="white", linewidth=0.4, zorder=2))
                stack += h
            for mid in order:
                pl = schedule.placements.get(mid)
                if pl is None:
                    continue
                hours = pl.hours_by_week.get(w)
                if not hours:
                    continue
                h = float(hours)
                ax.add_patch(Rectangle((w - 1, stack), 1, h, facecolor=colors[mid],
                                       edgecolor="white", linewidth=0.4, zorder=2))
                stack += h
            for buf in schedule.buffers:
                hours = buf.hours_by_week.get(w)
                if not hours:
                    continue
                h = float(hours)
                ax.add_patch(Rectangle((w - 1, stack), 1, h, facecolor=_BUFFER_COLOR,
                                       edgecolor="#999999", hatch="..", linewidth=0.4, zorder=2))
                stack += h
        for mid, week in sorted(schedule.anchors.items(), key=lambda kv: (kv[1], kv[0])):
            ax.axvline(week, color="#c0392b", linestyle="--", linewidth=1.0, zorder=3)
            ax.annotate(ctx.milestones[mid].name, xy=(week, top), xytext=(week, top * 1.02),
                        rotation=30, fontsize=7, ha="left", va="bottom", color="#c0392b")
        q = float(quantum)
        level = q
        while level < top:
            ax.axhline(level, color="#dddddd", linewidth=0.5, zorder=1)
            level += q
        ax.axhline(top, color="#555555", linewidth=1.0, zorder=3)
        ax.set_xlim(0, horizon)
        ax.set_ylim(0, top * 1.18)
        ax.set_xticks(range(0, horizon + 1, 2))
        ax.set_xlabel(f"Week (week 1 starts {cal.start_date.isoformat()})")
        ax.set_ylabel("Hours per week")
        ax.set_title(title)
        handles = [Patch(facecolor=_CROSSCUT_COLOR, label="crosscutting")]
        handles += [Patch(facecolor=colors[mid], label=ctx.milestones[mid].name)
                    for mid in order if mid in schedule.placements]
        if schedule.buffers:
            handles.append(Patch(facecolor=_BUFFER_COLOR, hatch="..", label="buffer"))
        ax.legend(handles=handles, loc="upper left", bbox_to_anchor=(1.01, 1.0),
                  fontsize=7, frameon=False)
        return fig


def save_canvas(ctx: PackContext, schedule: Schedule, target, *,
                quantum: Fraction = Fraction(40), title: str = "Work Packages Schedule"):
    fig = canvas_figure(ctx, schedule, quantum=quantum, title=title)
    return _save(fig, target)


def canvas_svg_bytes(ctx: PackContext, schedule: Schedule, *,
                     quantum: Fraction = Fraction(40),
                     title: str = "Work Packages Schedule") -> bytes:
    fig = canvas_figure(ctx, schedule, quantum=quantum, title=title)
    return _save(fig, None)


def document_figure(document: MilestonePlanDocument, *, title: str = "Milestone Plan"):
    """The plan table as a figure: hard/soft glyphs, dates, responsibilities."""
    headers = ["", "State", "Planned", "Forecast", "Team", "Client", "Description"]
    rows = []
    for r in document.rows:
        rows.append([
            "●" if r.hard else "○",
            {"completed": "C", "in_progress": "P", "not_started": ""}[r.status.value],
            short_date(r.planned_date),
            short_date(r.forecast_date) if r.forecast_date else "",
            "X" if r.responsible in (Responsible.TEAM, Responsible.JOINT) else "",
            "X" if r.responsible in (Responsible.CLIENT, Responsible.JOINT) else "",
            r.description,
        ])
    n = len(rows)
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(9.2, 1.2 + 0.32 * max(n, 1)))
        ax.set_axis_off()
        ax.set_xlim(0, 1)
        ax.set_ylim(0, n + 1.5)
        xs = [0.01, 0.05, 0.12, 0.23, 0.34, 0.40, 0.47]
        for x, head in zip(xs, headers):
            ax.text(x, n + 0.9, head, fontsize=8, fontweight="bold", va="center")
        ax.axhline(n + 0.5, color="#333333", linewidth=0.8)
        for i, row in enumerate(rows):
            y = n - i - 0.1
            if i % 2 == 1:
                ax.add_patch(Rectangle((0, y - 0.4), 1, 0.9, facecolor="#f5f5f5", zorder=0))
            for x, cell in zip(xs, row):
                ax.text(x, y, cell, fontsize=8, va="center")
        ax.text(0.01, -0.35, "State: C - Completed, P - In progress, blank - Not started"
                             "    ● hard  ○ soft",
                fontsize=7, color="#555555", va="center")
        ax.set_title(title)
        return fig


def save_document(document: MilestonePlanDocument, target, *, title: str = "Milestone Plan"):
    fig = document_figure(document, title=title)
    return _save(fig, target)


def document_svg_bytes(document: MilestonePlanDocument, *, title: str = "Milestone Plan") -> bytes:
    fig = document_figure(document, title=title)
    return _save(fig, None)
