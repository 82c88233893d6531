"""Milestone planning matrix: effort allocations from backlog leaves to milestones.

Each cell records how many hours of a leaf item go toward one milestone; a
milestone's work package is its column sum. Conservation is enforced locally:
a row can never exceed its leaf effort, and the whole matrix reconciles as

    total backlog effort = sum of work packages + crosscutting pool.
"""

from __future__ import annotations

from fractions import Fraction

from .backlog import Backlog
from .effort import as_hours, fmt_hours, hours_to_json
from .errors import (
    InvalidAllocation,
    NotALeaf,
    OverAllocation,
    SEVERITY_WARNING,
    UnknownItem,
    UnknownMilestone,
    Violation,
    violation,
)
from .milestones import MilestoneGraph

# Advisory threshold: splitting one item across many milestones obscures the
# mapping, so more than this many columns per row draws a lint warning.
SPLIT_LINT_THRESHOLD = 3


class AllocationMatrix:
    """Insertion-ordered sparse matrix of (item, milestone) -> hours."""

    def __init__(self):
        self._cells: dict[tuple[str, str], Fraction] = {}

    def __len__(self) -> int:
        return len(self._cells)

    def cells(self) -> dict[tuple[str, str], Fraction]:
        return dict(self._cells)

    def cell(self, item_id: str, milestone_id: str) -> Fraction:
        return self._cells.get((item_id, milestone_id), Fraction(0))

    # --- mutation ------------------------------------------------------

    def allocate(self, backlog: Backlog, graph: MilestoneGraph,
                 item_id: str, milestone_id: str, hours) -> Fraction:
        """Add ``hours`` to a cell; returns the new cell value.

        Additive on an existing cell. Rejects anything that would push the
        row total over the leaf's effort, reporting the remaining budget.
        """
        if item_id not in backlog:
            raise UnknownItem(f"backlog item {item_id!r} does not exist")
        if milestone_id not in graph:
            raise UnknownMilestone(f"milestone {milestone_id!r} does not exist")
        item = backlog.item(item_id)
        if not item.is_leaf:
            raise NotALeaf(f"item {item_id!r} is internal; allocate leaves only")
        amount = as_hours(hours)
        if amount <= 0:
            raise InvalidAllocation(f"allocation must be positive, got {amount}")
        budget = backlog.rollup_effort(item_id)
        row = self.row_total(item_id)
        if row + amount > budget:
            raise OverAllocation(
                f"allocating {fmt_hours(amount)} h to {item_id!r} exceeds its effort; "
                f"remaining budget is {fmt_hours(budget - row)} h",
                remaining=budget - row,
            )
        key = (item_id, milestone_id)
        self._cells[key] = self._cells.get(key, Fraction(0)) + amount
        return self._cells[key]

    def deallocate(self, item_id: str, milestone_id: str, hours=None) -> None:
        """Remove ``hours`` (default: all) from a cell; exact inverse of allocate."""
        key = (item_id, milestone_id)
        current = self._cells.get(key)
        if current is None:
            raise InvalidAllocation(f"no allocation for {item_id!r} x {milestone_id!r}")
        if hours is None:
            del self._cells[key]
            return
        amount = as_hours(hours)
        if amount <= 0 or amount > current:
            raise InvalidAllocation(
                f"cannot remove {fmt_hours(amount)} h from a {fmt_hours(current)} h cell"
            )
        if amount == current:
            del self._cells[key]
        else:
            self._cells[key] = current - amount

    # --- derived -------------------------------------------------------

    def row_total(self, item_id: str) -> Fraction:
        return sum((h for (iid, _), h in self._cells.items() if iid == item_id), Fraction(0))

    def row_milestones(self, item_id: str) -> list[str]:
        return [mid for (iid, mid) in self._cells if iid == item_id]

    def work_package_effort(self, graph: MilestoneGraph, milestone_id: str) -> Fraction:
        """Column sum: the total effort whose completion the milestone signals."""
        graph.milestone(milestone_id)
        return sum((h for (_, mid), h in self._cells.items() if mid == milestone_id), Fraction(0))

    def package_efforts(self, graph: MilestoneGraph) -> dict[str, Fraction]:
        """Work-package effort per milestone, keyed in topological order."""
        out = {mid: Fraction(0) for mid in graph.topological_order()}
        for (_, mid), h in self._cells.items():
            if mid in out:
                out[mid] += h
        return out

    def crosscutting_pool(self, backlog: Backlog) -> Fraction:
        """Unallocated hours of crosscutting leaves, spread over the span later."""
        pool = Fraction(0)
        for leaf in backlog.leaves():
            if leaf.crosscutting:
                pool += backlog.rollup_effort(leaf.id) - self.row_total(leaf.id)
        return pool

    # --- validation ------------------------------------------------------

    def validate(self, backlog: Backlog, graph: MilestoneGraph) -> list[Violation]:
        out: list[Violation] = []
        for (item_id, milestone_id), hours in self._cells.items():
            if item_id not in backlog:
                out.append(violation("unknown_item", f"allocation references missing item {item_id!r}",
                                     subject=item_id))
                continue
            if milestone_id not in graph:
                out.append(violation("unknown_milestone",
                                     f"allocation references missing milestone {milestone_id!r}",
                                     subject=milestone_id))
            if hours <= 0:
                out.append(violation("invalid_allocation",
                                     f"{item_id} x {milestone_id}: non-positive hours {hours}",
                                     subject=item_id))
            if not backlog.item(item_id).is_leaf:
                out.append(violation("not_a_leaf",
                                     f"{item_id}: allocation on an internal item", subject=item_id))
        for leaf in backlog.leaves():
            budget = backlog.rollup_effort(leaf.id)
            row = self.row_total(leaf.id)
            if row > budget:
                out.append(violation("over_allocation",
                                     f"{leaf.id}: allocated {fmt_hours(row)} h of {fmt_hours(budget)} h",
                                     subject=leaf.id, over=row - budget))
            elif row < budget and not leaf.crosscutting:
                out.append(violation("under_allocated",
                                     f"{leaf.id}: {fmt_hours(budget - row)} h not yet allocated",
                                     severity=SEVERITY_WARNING, subject=leaf.id,
                                     remaining=budget - row))
            if leaf.crosscutting and row > 0:
                out.append(violation("crosscutting_partially_allocated",
                                     f"{leaf.id}: crosscutting leaf also allocates {fmt_hours(row)} h to milestones",
                                     severity=SEVERITY_WARNING, subject=leaf.id))
            split = len(self.row_milestones(leaf.id))
            if split > SPLIT_LINT_THRESHOLD:
                out.append(violation("split_across_many",
                                     f"{leaf.id}: split across {split} milestones; keep splits sparing",
                                     severity=SEVERITY_WARNING, subject=leaf.id))
        total = backlog.total_effort()
        column_sum = sum(self._cells.values(), Fraction(0))
        pool = self.crosscutting_pool(backlog)
        if column_sum + pool != total:
            out.append(violation("conservation_broken",
                                 f"work packages {fmt_hours(column_sum)} h + pool {fmt_hours(pool)} h "
                                 f"!= backlog total {fmt_hours(total)} h"))
        return out

    # --- export ----------------------------------------------------------

    def to_table(self, backlog: Backlog, graph: MilestoneGraph) -> list[list[str]]:
        """Delimited-table cells: leaf rows in backlog order, milestone columns in
        topological order, final row holding the column totals."""
        order = graph.topological_order()
        roots = backlog.roots()
        title = roots[0].name if len(roots) == 1 else "Backlog Item"
        header = ["WBS Code", title, "Total Effort"]
        header += [graph.milestone(mid).name for mid in order]
        rows = [header]
        for leaf in backlog.leaves():
            row = [leaf.wbs_code, leaf.name, fmt_hours(backlog.rollup_effort(leaf.id))]
            for mid in order:
                hours = self.cell(leaf.id, mid)
                row.append(fmt_hours(hours) if hours else "")
            rows.append(row)
        totals = ["", "Work Packages", fmt_hours(backlog.total_effort())]
        totals += [fmt_hours(self.work_package_effort(graph, mid)) for mid in order]
        rows.append(totals)
        return rows

    # --- serialization ---------------------------------------------------

    def to_json_list(self) -> list[dict]:
        return [
            {"item_id": iid, "milestone_id": mid, "hours": hours_to_json(h)}
            for (iid, mid), h in self._cells.items()
        ]

    @classmethod
    def from_json_list(cls, records: list[dict]) -> "AllocationMatrix":
        m = cls()
        for rec in records:
            m._cells[(rec["item_id"], rec["milestone_id"])] = as_hours(rec["hours"])
        return m
