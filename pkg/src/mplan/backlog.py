"""Hierarchical product backlog: the scope tree that carries effort estimates.

The backlog is a forest of items identified by opaque ids and dotted WBS
codes. Effort lives on leaves only; internal totals are always derived by
:meth:`Backlog.rollup_effort`, which keeps the books balanced by
construction. Items flagged ``crosscutting`` hold effort that is spread over
the project span instead of being allocated to a single milestone.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterator

from .effort import as_hours, hours_to_json
from .errors import (
    BadWbsCode,
    DuplicateId,
    ItemNotFound,
    NotALeaf,
    ParentHasLeafEffort,
    ParentNotFound,
    PlanError,
    SEVERITY_WARNING,
    Violation,
    violation,
)

_WBS_SEGMENT = re.compile(r"^[0-9A-Za-z]+$")


class ItemKind(str, Enum):
    DELIVERABLE = "deliverable"
    EPIC = "epic"
    FEATURE = "feature"
    STORY = "story"
    TECHNICAL_STORY = "technical_story"
    PLANNING_PACKAGE = "planning_package"


@dataclass
class BacklogItem:
    """One node of the backlog forest.

    ``effort_hours`` must be present exactly on leaves; ``children`` is kept
    in insertion order and maintained by the owning :class:`Backlog`.
    """

    id: str
    wbs_code: str
    name: str
    kind: ItemKind = ItemKind.STORY
    effort_hours: Fraction | None = None
    crosscutting: bool = False
    parent_id: str | None = None
    children: list[str] = field(default_factory=list)

    def __post_init__(self):
        if isinstance(self.kind, str) and not isinstance(self.kind, ItemKind):
            self.kind = ItemKind(self.kind)
        if self.effort_hours is not None:
            self.effort_hours = as_hours(self.effort_hours)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "wbs_code": self.wbs_code,
            "name": self.name,
            "kind": self.kind.value,
            "effort_hours": None if self.effort_hours is None else hours_to_json(self.effort_hours),
            "crosscutting": self.crosscutting,
            "parent_id": self.parent_id,
        }


def _is_child_wbs(parent_code: str, child_code: str) -> bool:
    if not child_code.startswith(parent_code + "."):
        return False
    tail = child_code[len(parent_code) + 1 :]
    return bool(_WBS_SEGMENT.match(tail))


class Backlog:
    """Mutable backlog forest with insertion-ordered items."""

    def __init__(self):
        self._items: dict[str, BacklogItem] = {}

    # --- accessors -----------------------------------------------------

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._items

    def __len__(self) -> int:
        return len(self._items)

    def item(self, item_id: str) -> BacklogItem:
        try:
            return self._items[item_id]
        except KeyError:
            raise ItemNotFound(f"backlog item {item_id!r} does not exist") from None

    def items(self) -> list[BacklogItem]:
        """All items in insertion order."""
        return list(self._items.values())

    def roots(self) -> list[BacklogItem]:
        return [it for it in self._items.values() if it.parent_id is None]

    def leaves(self) -> list[BacklogItem]:
        """Leaf items in insertion order: the rows of the planning matrix."""
        return [it for it in self._items.values() if it.is_leaf]

    def dfs_order(self) -> Iterator[BacklogItem]:
        """Depth-first traversal, roots and children in insertion order."""

        def walk(item: BacklogItem) -> Iterator[BacklogItem]:
            yield item
            for cid in item.children:
                child = self._items.get(cid)
                if child is not None:
                    yield from walk(child)

        for root in self.roots():
            yield from walk(root)

    # --- mutation ------------------------------------------------------

    def add_item(self, parent_id: str | None, item: BacklogItem) -> str:
        """Insert ``item`` under ``parent_id`` (or as a root) and return its id.

        Rejected when the parent still carries leaf effort: clear it with
        :meth:`set_effort` first, so a refined item can never be counted twice.
        """
        if item.id in self._items:
            raise DuplicateId(f"backlog item {item.id!r} already exists")
        if item.children:
            raise PlanError(f"new item {item.id!r} must be added without children")
        for existing in self._items.values():
            if existing.wbs_code == item.wbs_code:
                raise BadWbsCode(f"wbs code {item.wbs_code!r} already used by {existing.id!r}")
        if parent_id is None:
            if not _WBS_SEGMENT.match(item.wbs_code):
                raise BadWbsCode(f"root wbs code must be a single segment, got {item.wbs_code!r}")
        else:
            parent = self._items.get(parent_id)
            if parent is None:
                raise ParentNotFound(f"parent {parent_id!r} does not exist")
            if parent.is_leaf and parent.effort_hours is not None:
                raise ParentHasLeafEffort(
                    f"parent {parent_id!r} carries leaf effort; remove it before adding children"
                )
            if not _is_child_wbs(parent.wbs_code, item.wbs_code):
                raise BadWbsCode(
                    f"wbs code {item.wbs_code!r} must extend {parent.wbs_code!r} by one segment"
                )
        item.parent_id = parent_id
        self._items[item.id] = item
        if parent_id is not None:
            self._items[parent_id].children.append(item.id)
        return item.id

    def set_effort(self, item_id: str, hours) -> None:
        """Set or clear (``None``) the leaf effort of an item."""
        item = self.item(item_id)
        if hours is not None and not item.is_leaf:
            raise NotALeaf(f"item {item_id!r} has children; effort lives on leaves only")
        item.effort_hours = None if hours is None else as_hours(hours)

    # --- derived -------------------------------------------------------

    def rollup_effort(self, item_id: str) -> Fraction:
        """Leaf: its own effort (0 when unset). Internal: sum of child rollups."""
        item = self.item(item_id)
        seen: set[str] = set()

        def total(it: BacklogItem) -> Fraction:
            if it.id in seen:
                raise PlanError(f"backlog contains a cycle through {it.id!r}")
            seen.add(it.id)
            if it.is_leaf:
                return it.effort_hours if it.effort_hours is not None else Fraction(0)
            return sum((total(self.item(cid)) for cid in it.children), Fraction(0))

        return total(item)

    def total_effort(self) -> Fraction:
        return sum((self.rollup_effort(r.id) for r in self.roots()), Fraction(0))

    # --- validation ------------------------------------------------------

    def validate(self) -> list[Violation]:
        """Check every invariant; returns one violation per broken rule."""
        out: list[Violation] = []
        wbs_seen: dict[str, str] = {}
        for item in self._items.values():
            parent = self._items.get(item.parent_id) if item.parent_id else None
            if item.parent_id is not None and parent is None:
                out.append(violation("unknown_parent", f"{item.id}: parent {item.parent_id!r} missing",
                                     subject=item.id))
            if item.wbs_code in wbs_seen:
                out.append(violation("duplicate_wbs_code",
                                     f"{item.id}: wbs code {item.wbs_code!r} already used by {wbs_seen[item.wbs_code]!r}",
                                     subject=item.id))
            else:
                wbs_seen[item.wbs_code] = item.id
            if parent is not None:
                if not _is_child_wbs(parent.wbs_code, item.wbs_code):
                    out.append(violation("bad_wbs_code",
                                         f"{item.id}: wbs {item.wbs_code!r} does not extend parent {parent.wbs_code!r}",
                                         subject=item.id))
                if item.id not in parent.children:
                    out.append(violation("broken_child_link",
                                         f"{item.id}: missing from children of {parent.id!r}",
                                         subject=item.id))
            elif not _WBS_SEGMENT.match(item.wbs_code):
                out.append(violation("bad_wbs_code",
                                     f"{item.id}: root wbs {item.wbs_code!r} is not a single segment",
                                     subject=item.id))
            # ancestor walk detecting cycles
            hops = 0
            cur = item
            while cur.parent_id is not None and hops <= len(self._items):
                if cur.parent_id == item.id:
                    out.append(violation("cycle_detected",
                                         f"{item.id}: item is its own ancestor", subject=item.id))
                    break
                cur = self._items.get(cur.parent_id)
                if cur is None:
                    break
                hops += 1
            if item.is_leaf:
                if item.effort_hours is None:
                    out.append(violation("missing_leaf_effort",
                                         f"{item.id}: leaf has no effort estimate", subject=item.id))
                elif item.effort_hours < 0:
                    out.append(violation("negative_effort",
                                         f"{item.id}: effort {item.effort_hours} < 0", subject=item.id))
                if (item.kind is ItemKind.PLANNING_PACKAGE
                        and (item.effort_hours is None or item.effort_hours <= 0)):
                    out.append(violation("planning_package_zero_budget",
                                         f"{item.id}: planning package needs a positive budget",
                                         subject=item.id))
            else:
                if item.effort_hours is not None:
                    out.append(violation("leaf_effort_on_internal",
                                         f"{item.id}: internal node carries effort_hours", subject=item.id))
                if item.crosscutting:
                    out.append(violation("crosscutting_on_internal",
                                         f"{item.id}: crosscutting is a leaf-level flag",
                                         severity=SEVERITY_WARNING, subject=item.id))
        return out

    # --- serialization ---------------------------------------------------

    def to_json_list(self) -> list[dict]:
        return [it.to_json_dict() for it in self._items.values()]

    @classmethod
    def from_json_list(cls, records: list[dict]) -> "Backlog":
        """Rebuild from records without add-time checks; call validate() after."""
        bl = cls()
        for rec in records:
            effort = rec.get("effort_hours")
            item = BacklogItem(
                id=rec["id"],
                wbs_code=rec["wbs_code"],
                name=rec["name"],
                kind=ItemKind(rec.get("kind", "story")),
                effort_hours=None if effort is None else as_hours(effort),
                crosscutting=bool(rec.get("crosscutting", False)),
                parent_id=rec.get("parent_id"),
            )
            bl._items[item.id] = item
        for item in bl._items.values():
            if item.parent_id is not None and item.parent_id in bl._items:
                bl._items[item.parent_id].children.append(item.id)
        return bl
