"""Command-line front end for batch planning work.

Subcommands operate on the canonical plan JSON file. Exit codes: 0 success,
1 engine violations, 2 usage errors. Output for identical inputs is
byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import date
from fractions import Fraction
from pathlib import Path

from .document import render, render_text_table
from .effort import as_hours
from .errors import PlanError
from .plan import Plan
from .schedule import Schedule, anchor_hard_milestones

PLACEMENTS_SCHEMA = "milestone-plan-placements/1"


def _load_plan(path: str) -> Plan:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SystemExit(_usage_error(f"cannot read {path}: {exc}"))
    if not text.strip():
        raise SystemExit(_usage_error(f"{path} is empty"))
    try:
        return Plan.loads(text)
    except PlanError as exc:
        raise SystemExit(_usage_error(f"{path}: {exc}"))


def _usage_error(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _emit(data: bytes, out: str | None) -> None:
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)


def _print_violations(violations) -> None:
    for v in violations:
        print(f"{v.severity}: {v.code}: {v.message}", file=sys.stderr)


def _tsv(rows: list[list[str]]) -> bytes:
    return ("\n".join("\t".join(row) for row in rows) + "\n").encode("utf-8")


def _dates_rows(plan: Plan) -> list[list[str]]:
    dates = plan.derive_due_dates()
    rows = [["milestone", "name", "due_date"]]
    for mid in plan.graph.topological_order():
        rows.append([mid, plan.graph.milestone(mid).name, dates[mid].isoformat()])
    return rows


def cmd_validate(args) -> int:
    plan = _load_plan(args.plan)
    violations = plan.validate()
    if plan.schedule is not None:
        violations = list(violations) + [v for v in plan.schedule.violations
                                         if v not in violations]
    if violations:
        _print_violations(violations)
        return 1
    print("ok")
    return 0


def cmd_matrix(args) -> int:
    plan = _load_plan(args.plan)
    _emit(_tsv(plan.matrix.to_table(plan.backlog, plan.graph)), args.out)
    return 0


def cmd_dates(args) -> int:
    plan = _load_plan(args.plan)
    _emit(_tsv(_dates_rows(plan)), args.out)
    return 0


def cmd_plan(args) -> int:
    plan = _load_plan(args.plan)
    document = plan.document if plan.document is not None else plan.assemble_document()
    _emit(render(document, args.format), args.out)
    return 0


def _load_placements(path: str) -> dict[str, dict[int, Fraction]]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit(_usage_error(f"cannot read placements {path}: {exc}"))
    if not isinstance(data, dict) or data.get("schema") != PLACEMENTS_SCHEMA:
        raise SystemExit(_usage_error(f"{path} is not a {PLACEMENTS_SCHEMA} document"))
    out: dict[str, dict[int, Fraction]] = {}
    for rec in data.get("placements", []):
        out[rec["milestone_id"]] = {int(w): as_hours(h)
                                    for w, h in rec.get("hours_by_week", {}).items()}
    return out


def cmd_schedule(args) -> int:
    plan = _load_plan(args.plan)
    if args.check:
        placements = _load_placements(args.check)
        plan.schedule = None
        plan.ensure_schedule()
        try:
            for milestone_id, hours_by_week in placements.items():
                plan.place(milestone_id, hours_by_week)
            plan.spread_crosscutting()
        except PlanError as exc:
            print(f"error: {exc.code}: {exc}", file=sys.stderr)
            return 1
        violations = plan.validate_schedule()
        if violations:
            _print_violations(violations)
            return 1
        _emit(_tsv(_dates_rows(plan)), args.out)
        return 0
    schedule = plan.auto_schedule()
    plan.schedule = schedule
    payload = json.dumps(schedule.to_json_dict(), indent=2) + "\n"
    _emit(payload.encode("utf-8"), args.out)
    if schedule.violations:
        _print_violations(schedule.violations)
        return 1
    return 0


def cmd_svg(args) -> int:
    plan = _load_plan(args.plan)
    from . import render as figures

    if args.what == "canvas":
        if plan.schedule is None:
            print("error: plan has no schedule to draw", file=sys.stderr)
            return 1
        data = figures.canvas_svg_bytes(plan.pack_context(), plan.schedule,
                                        quantum=as_hours(args.quantum),
                                        title=f"{plan.name or 'Plan'}: Work Packages Schedule")
        _emit(data, args.out)
        return 0
    document = plan.document if plan.document is not None else plan.assemble_document()
    data = figures.document_svg_bytes(document, title=f"{plan.name or 'Plan'}: Milestone Plan")
    _emit(data, args.out)
    return 0


def cmd_report(args) -> int:
    """Write the whole reporting bundle: delimited tables plus figures."""
    plan = _load_plan(args.plan)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "matrix.tsv").write_bytes(_tsv(plan.matrix.to_table(plan.backlog, plan.graph)))
    if plan.schedule is not None:
        from . import render as figures

        (out_dir / "dates.tsv").write_bytes(_tsv(_dates_rows(plan)))
        document = plan.document if plan.document is not None else plan.assemble_document()
        (out_dir / "plan.txt").write_text(render_text_table(document), encoding="utf-8")
        figures.save_canvas(plan.pack_context(), plan.schedule, out_dir / "canvas.svg",
                            quantum=as_hours(args.quantum),
                            title=f"{plan.name or 'Plan'}: Work Packages Schedule")
        figures.save_document(document, out_dir / "plan.svg",
                              title=f"{plan.name or 'Plan'}: Milestone Plan")
    print(f"report written to {out_dir}")
    return 0


def cmd_fixture(args) -> int:
    from . import fixtures

    if args.name == "amazonlight":
        data = fixtures.amazonlight_plan().dumps().encode("utf-8")
    elif args.name == "amazonlight-april":
        data = fixtures.amazonlight_plan(system_deployed=date(2025, 4, 1),
                                         include_reference_schedule=False).dumps().encode("utf-8")
    elif args.name == "amazonlight-placements":
        placements = fixtures.amazonlight_reference_placements()
        doc = {
            "schema": PLACEMENTS_SCHEMA,
            "placements": [
                {"milestone_id": mid, "hours_by_week": {str(w): h for w, h in sorted(weeks.items())}}
                for mid, weeks in placements.items()
            ],
        }
        data = (json.dumps(doc, indent=2) + "\n").encode("utf-8")
    else:
        return _usage_error(f"unknown fixture {args.name!r}")
    _emit(data, args.out)
    return 0


def cmd_serve(args) -> int:  # pragma: no cover - exercised via the app factory
    from .service import serve

    serve(args.store, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check every plan rule")
    p.add_argument("plan")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("matrix", help="emit the planning matrix as TSV")
    p.add_argument("plan")
    p.add_argument("-o", "--out")
    p.set_defaults(fn=cmd_matrix)

    p = sub.add_parser("schedule", help="auto-pack the schedule, or check a placements file")
    p.add_argument("plan")
    p.add_argument("--check", metavar="PLACEMENTS")
    p.add_argument("-o", "--out")
    p.set_defaults(fn=cmd_schedule)

    p = sub.add_parser("dates", help="derive milestone due dates as TSV")
    p.add_argument("plan")
    p.add_argument("-o", "--out")
    p.set_defaults(fn=cmd_dates)

    p = sub.add_parser("plan", help="emit the milestone plan document")
    p.add_argument("plan")
    p.add_argument("--format", choices=["text_table", "json", "svg"], default="text_table")
    p.add_argument("-o", "--out")
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("svg", help="render the schedule canvas or plan table")
    p.add_argument("plan")
    p.add_argument("--what", choices=["canvas", "document"], default="canvas")
    p.add_argument("--quantum", type=float, default=40.0,
                   help="hours per rendered note gridline (default 40)")
    p.add_argument("-o", "--out")
    p.set_defaults(fn=cmd_svg)

    p = sub.add_parser("report", help="write tables and figures into a directory")
    p.add_argument("plan")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--quantum", type=float, default=40.0)
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("fixture", help="emit a bundled example file")
    p.add_argument("name", choices=["amazonlight", "amazonlight-april", "amazonlight-placements"])
    p.add_argument("-o", "--out")
    p.set_defaults(fn=cmd_fixture)

    p = sub.add_parser("serve", help="run the HTTP JSON API")
    p.add_argument("--store", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8040)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except PlanError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
