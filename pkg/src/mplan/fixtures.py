"""Bundled example project: AmazonLight, an e-commerce site build.

A complete, internally consistent plan used by the tests, the docs and the
CLI: a 2600-hour backlog, fifteen milestones with finish-to-finish
dependencies, a fully reconciled allocation matrix, a 33-week calendar with
a two-week holiday blackout, parallelism caps and start gates, plus a
reference hand placement whose derived dates land on the published plan.

The default plan carries the negotiated deployment date (May 1). Passing
``system_deployed=date(2025, 4, 1)`` rebuilds the original customer ask,
which the packer correctly reports as infeasible.
"""

from __future__ import annotations

from datetime import date
from fractions import Fraction

from .backlog import BacklogItem, ItemKind
from .milestones import Milestone, MilestoneKind, Responsible
from .plan import Plan
from .schedule import WorkPackageConstraint
from .timegrid import Calendar

START = date(2024, 10, 1)
HOLIDAY_BLACKOUT_WEEKS = frozenset({13, 14})  # Christmas and New Year weeks


def _item(wbs: str, name: str, kind: ItemKind, hours=None, crosscutting=False) -> BacklogItem:
    return BacklogItem(id=wbs, wbs_code=wbs, name=name, kind=kind,
                       effort_hours=hours, crosscutting=crosscutting)


def amazonlight_plan(system_deployed: date = date(2025, 5, 1),
                     include_reference_schedule: bool = True) -> Plan:
    plan = Plan(name="AmazonLight")
    plan.set_calendar(Calendar(
        start_date=START,
        horizon_weeks=33,
        fte_count=Fraction(4),
        hours_per_fte_week=Fraction(40),
        blackouts=HOLIDAY_BLACKOUT_WEEKS,
    ))

    # --- backlog (leaf insertion order defines the matrix rows) ---------
    bl = plan.backlog
    bl.add_item(None, _item("1", "AmazonLight Project", ItemKind.DELIVERABLE))
    bl.add_item("1", _item("1.a", "UX Design", ItemKind.TECHNICAL_STORY, 150))
    bl.add_item("1", _item("1.b", "Infrastructure", ItemKind.TECHNICAL_STORY, 100))
    bl.add_item("1", _item("1.c", "Website Software", ItemKind.DELIVERABLE))
    bl.add_item("1.c", _item("1.c.1", "Browsing", ItemKind.EPIC))
    bl.add_item("1.c.1", _item("1.c.1.1", "Category List", ItemKind.STORY, 100))
    bl.add_item("1.c.1", _item("1.c.1.2", "Category Book List", ItemKind.STORY, 150))
    bl.add_item("1.c.1", _item("1.c.1.3", "Book Details", ItemKind.STORY, 100))
    bl.add_item("1.c", _item("1.c.2", "Buying", ItemKind.EPIC))
    bl.add_item("1.c.2", _item("1.c.2.1", "Add to Cart", ItemKind.STORY, 100))
    bl.add_item("1.c.2", _item("1.c.2.2", "Remove From Cart", ItemKind.STORY, 50))
    bl.add_item("1.c.2", _item("1.c.2.3", "Shipping Method", ItemKind.STORY, 50))
    bl.add_item("1.c.2", _item("1.c.2.4", "Checkout", ItemKind.STORY, 100))
    bl.add_item("1.c", _item("1.c.3", "Emergent features (R3)", ItemKind.PLANNING_PACKAGE, 250))
    bl.add_item("1.c", _item("1.c.4", "Database Design", ItemKind.EPIC, 200))
    bl.add_item("1", _item("1.d", "Beta testing", ItemKind.TECHNICAL_STORY, 50))
    bl.add_item("1", _item("1.e", "Acceptance Testing", ItemKind.TECHNICAL_STORY, 100))
    bl.add_item("1", _item("1.f", "Deployment", ItemKind.TECHNICAL_STORY, 150))
    # refactoring was identified late, so its row trails the other leaves
    bl.add_item("1.c", _item("1.c.5", "Refactoring", ItemKind.TECHNICAL_STORY, 350))
    bl.add_item("1", _item("1.g", "Project Management", ItemKind.TECHNICAL_STORY, 600,
                           crosscutting=True))

    # --- milestones (insertion order defines matrix columns) ------------
    def ms(mid, name, *, hard=None, commit=None, resp=None, why="", done_when=""):
        plan.add_milestone(Milestone(
            id=mid, name=name,
            kind=MilestoneKind.HARD if hard else MilestoneKind.SOFT,
            hard_date=hard, commitment_date=commit,
            responsible=resp, rationale=why, completion_criteria=done_when,
        ))

    ms("kickoff", "Project kick-off", hard=date(2024, 10, 1), resp=Responsible.JOINT,
       why="company staffing window", done_when="Team assembled; sponsor meeting held")
    ms("design-approved", "Design concept approved", resp=Responsible.CLIENT,
       why="rework risk", done_when="Information architecture and UI design accepted by sponsor")
    ms("infra-selected", "Infrastructure selected", resp=Responsible.TEAM,
       why="rework risk", done_when="Cloud provider chosen from the shortlist")
    ms("cloud-available", "Cloud infrastructure available", commit=date(2025, 1, 10),
       resp=Responsible.CLIENT, why="customer-provisioned environment",
       done_when="Production cloud environment reachable by the team")
    ms("design-complete", "Design completed", resp=Responsible.TEAM,
       why="design follow-through", done_when="Sponsor feedback folded into the design")
    ms("release-1", "Release 1: CL, BD, AC, CO, Data Base", resp=Responsible.TEAM,
       why="first feedback release", done_when="Listed features tested and running in production config")
    ms("beta-launched", "Beta testing launched", resp=Responsible.JOINT,
       why="site design validation", done_when="Beta users on Release 1; instrumentation live")
    ms("release-2", "Release 2: CBL, RC, SM", resp=Responsible.TEAM,
       why="progress confirmation", done_when="Listed features tested and running in production config")
    ms("beta-reviewed", "Beta testing results reviewed", resp=Responsible.JOINT,
       why="feedback intake", done_when="Every beta insight dispositioned")
    ms("release-3", "Release 3: Emergent features", resp=Responsible.TEAM,
       why="reserved scope", done_when="Beta-driven changes and late features delivered")
    ms("atp-approved", "Acceptance testing procedure approved", resp=Responsible.CLIENT,
       why="acceptance gate", done_when="Sponsor signs the acceptance test suite")
    ms("atp-complete", "Acceptance test completed", resp=Responsible.JOINT,
       why="acceptance gate", done_when="All acceptance tests pass without objection")
    ms("deployed", "System deployed", hard=system_deployed, resp=Responsible.TEAM,
       why="customer launch date", done_when="All functionality live; 15 fault-free days observed")
    ms("signoff", "Customer sign-off", commit=date(2025, 5, 15), resp=Responsible.CLIENT,
       why="ownership transfer", done_when="Customer accepts ownership of the software")
    ms("closed", "Project closed", hard=date(2025, 5, 15), resp=Responsible.TEAM,
       why="company fiscal calendar", done_when="Postmortem held; records archived")

    # --- finish-to-finish dependencies ----------------------------------
    for pred, succ in [
        ("kickoff", "design-approved"),
        ("kickoff", "infra-selected"),
        ("design-approved", "design-complete"),
        ("infra-selected", "cloud-available"),
        ("design-complete", "release-1"),
        ("cloud-available", "release-1"),
        ("release-1", "beta-launched"),
        ("cloud-available", "beta-launched"),
        ("release-1", "release-2"),
        ("beta-launched", "beta-reviewed"),
        ("beta-reviewed", "release-3"),
        ("release-2", "release-3"),
        ("atp-approved", "atp-complete"),
        ("release-3", "atp-complete"),
        ("atp-complete", "deployed"),
        ("deployed", "signoff"),
        ("signoff", "closed"),
    ]:
        plan.add_dependency(pred, succ)

    # --- allocation matrix ----------------------------------------------
    for item, milestone, hours in [
        ("1.a", "design-approved", 140),
        ("1.a", "design-complete", 10),
        ("1.b", "infra-selected", 100),
        ("1.c.1.1", "release-1", 100),
        ("1.c.1.2", "release-2", 150),
        ("1.c.1.3", "release-1", 100),
        ("1.c.2.1", "release-1", 100),
        ("1.c.2.2", "release-2", 50),
        ("1.c.2.3", "release-2", 50),
        ("1.c.2.4", "release-1", 100),
        ("1.c.3", "release-3", 250),
        ("1.c.4", "release-1", 200),
        ("1.d", "beta-launched", 40),
        ("1.d", "beta-reviewed", 10),
        ("1.e", "atp-approved", 50),
        ("1.e", "atp-complete", 50),
        ("1.f", "deployed", 150),
        ("1.c.5", "release-1", 150),
        ("1.c.5", "release-2", 100),
        ("1.c.5", "release-3", 100),
    ]:
        plan.allocate(item, milestone, hours)

    # --- scheduling constraints -----------------------------------------
    # caps reflect the one-person lanes of the reference arrangement; the
    # start gates encode "no programming before the infrastructure is
    # selected", the beta review window, and acceptance-before-deployment
    for c in [
        WorkPackageConstraint("design-approved", max_weekly_hours=Fraction(50)),
        WorkPackageConstraint("infra-selected", max_weekly_hours=Fraction(50)),
        WorkPackageConstraint("design-complete", max_weekly_hours=Fraction(40),
                              not_before_milestone="design-approved"),
        WorkPackageConstraint("release-1", not_before_milestone="infra-selected"),
        WorkPackageConstraint("beta-launched", max_weekly_hours=Fraction(40)),
        WorkPackageConstraint("release-2", not_before_milestone="release-1"),
        WorkPackageConstraint("beta-reviewed", max_weekly_hours=Fraction(40),
                              not_before_date=date(2025, 2, 25)),
        WorkPackageConstraint("atp-approved", max_weekly_hours=Fraction(40)),
        WorkPackageConstraint("atp-complete", max_weekly_hours=Fraction(40),
                              not_before_milestone="release-3"),
        WorkPackageConstraint("deployed", max_weekly_hours=Fraction(40),
                              not_before_milestone="atp-complete"),
    ]:
        plan.set_constraint(c)

    if include_reference_schedule:
        apply_reference_schedule(plan)
        plan.document = plan.assemble_document()
    return plan


def amazonlight_reference_placements() -> dict[str, dict[int, int]]:
    """Hand arrangement: design and infrastructure first on narrow lanes,
    Release 1 split around the holiday blackout, Release 2 and beta next,
    deployment last against its anchor."""
    return {
        "design-approved": {1: 50, 2: 50, 3: 40},
        "infra-selected": {1: 30, 2: 30, 3: 20, 4: 10, 5: 10},
        "design-complete": {6: 10},
        "release-1": {6: 80, 7: 90, 8: 90, 9: 90, 10: 90, 11: 90, 12: 90, 15: 90, 16: 40},
        "beta-launched": {16: 40},
        "release-2": {17: 120, 18: 120, 19: 110},
        "beta-reviewed": {22: 10},
        "release-3": {20: 100, 21: 100, 22: 100, 23: 50},
        "atp-approved": {23: 20, 24: 30},
        "atp-complete": {25: 40, 26: 10},
        "deployed": {27: 40, 28: 40, 29: 40, 30: 30},
    }


def apply_reference_schedule(plan: Plan) -> None:
    """Place the reference arrangement and spread the crosscutting pool."""
    plan.schedule = None
    plan.ensure_schedule()
    for milestone_id, hours_by_week in amazonlight_reference_placements().items():
        plan.place(milestone_id, hours_by_week)
    plan.spread_crosscutting()
