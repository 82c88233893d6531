"""Milestone catalog and the finish-to-finish dependency graph.

A milestone names a project state, not an activity. Edges are
finish-to-finish only: the successor cannot complete until the predecessor
has completed, which constrains due weeks but never start weeks. The graph
stays acyclic after every successful mutation, and ordering ties are broken
by insertion order so replays are deterministic.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from datetime import date
from enum import Enum

from .errors import (
    BadMilestoneDate,
    CyclicGraph,
    DuplicateDependency,
    DuplicateId,
    DuplicateMilestoneName,
    UnknownMilestone,
    WouldCreateCycle,
)


class MilestoneKind(str, Enum):
    HARD = "hard"
    SOFT = "soft"


class Responsible(str, Enum):
    TEAM = "team"
    CLIENT = "client"
    JOINT = "joint"


@dataclass
class Milestone:
    """A named project state with hard/soft classification.

    Hard milestones carry an externally fixed ``hard_date`` and anchor the
    schedule; soft milestones get their date from planning. A zero-effort
    milestone fulfilled by an outside party may carry a ``commitment_date``,
    the date that party has promised.
    """

    id: str
    name: str
    kind: MilestoneKind = MilestoneKind.SOFT
    hard_date: date | None = None
    commitment_date: date | None = None
    completion_criteria: str = ""
    rationale: str = ""
    responsible: Responsible | None = None

    def __post_init__(self):
        if isinstance(self.kind, str) and not isinstance(self.kind, MilestoneKind):
            self.kind = MilestoneKind(self.kind)
        if self.responsible is not None and not isinstance(self.responsible, Responsible):
            self.responsible = Responsible(self.responsible)
        if self.kind is MilestoneKind.HARD and self.hard_date is None:
            raise BadMilestoneDate(f"hard milestone {self.id!r} needs a hard_date")
        if self.kind is MilestoneKind.SOFT and self.hard_date is not None:
            raise BadMilestoneDate(f"soft milestone {self.id!r} must not carry a hard_date")
        if not self.name:
            raise DuplicateMilestoneName(f"milestone {self.id!r} needs a nonempty name")

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "kind": self.kind.value,
            "hard_date": self.hard_date.isoformat() if self.hard_date else None,
            "commitment_date": self.commitment_date.isoformat() if self.commitment_date else None,
            "completion_criteria": self.completion_criteria,
            "rationale": self.rationale,
            "responsible": self.responsible.value if self.responsible else None,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Milestone":
        return cls(
            id=d["id"],
            name=d["name"],
            kind=MilestoneKind(d.get("kind", "soft")),
            hard_date=date.fromisoformat(d["hard_date"]) if d.get("hard_date") else None,
            commitment_date=date.fromisoformat(d["commitment_date"]) if d.get("commitment_date") else None,
            completion_criteria=d.get("completion_criteria", ""),
            rationale=d.get("rationale", ""),
            responsible=Responsible(d["responsible"]) if d.get("responsible") else None,
        )


@dataclass(frozen=True)
class Dependency:
    predecessor: str
    successor: str

    def to_json_dict(self) -> dict:
        return {"predecessor": self.predecessor, "successor": self.successor}


class MilestoneGraph:
    """Insertion-ordered milestones plus acyclic finish-to-finish edges."""

    def __init__(self):
        self._milestones: dict[str, Milestone] = {}
        self._edges: list[Dependency] = []
        self._succ: dict[str, list[str]] = {}
        self._pred: dict[str, list[str]] = {}

    # --- accessors -----------------------------------------------------

    def __contains__(self, milestone_id: str) -> bool:
        return milestone_id in self._milestones

    def __len__(self) -> int:
        return len(self._milestones)

    def milestone(self, milestone_id: str) -> Milestone:
        try:
            return self._milestones[milestone_id]
        except KeyError:
            raise UnknownMilestone(f"milestone {milestone_id!r} does not exist") from None

    def milestones(self) -> list[Milestone]:
        return list(self._milestones.values())

    def dependencies(self) -> list[Dependency]:
        return list(self._edges)

    def predecessors(self, milestone_id: str) -> list[str]:
        self.milestone(milestone_id)
        return list(self._pred.get(milestone_id, ()))

    def successors(self, milestone_id: str) -> list[str]:
        self.milestone(milestone_id)
        return list(self._succ.get(milestone_id, ()))

    def insertion_index(self, milestone_id: str) -> int:
        for i, mid in enumerate(self._milestones):
            if mid == milestone_id:
                return i
        raise UnknownMilestone(f"milestone {milestone_id!r} does not exist")

    # --- mutation ------------------------------------------------------

    def add_milestone(self, milestone: Milestone) -> str:
        if milestone.id in self._milestones:
            raise DuplicateId(f"milestone {milestone.id!r} already exists")
        for other in self._milestones.values():
            if other.name == milestone.name:
                raise DuplicateMilestoneName(f"milestone name {milestone.name!r} already used")
        self._milestones[milestone.id] = milestone
        return milestone.id

    def add_dependency(self, predecessor: str, successor: str) -> Dependency:
        """Add a finish-to-finish edge, rejecting anything that closes a cycle."""
        self.milestone(predecessor)
        self.milestone(successor)
        if predecessor == successor:
            raise WouldCreateCycle(
                f"self-dependency {predecessor!r} -> {successor!r}",
                cycle=[predecessor, successor],
            )
        if any(e.predecessor == predecessor and e.successor == successor for e in self._edges):
            raise DuplicateDependency(f"edge {predecessor!r} -> {successor!r} already present")
        back_path = self._find_path(successor, predecessor)
        if back_path is not None:
            # reads successor -> ... -> predecessor -> successor (closed by the new edge)
            cycle = back_path + [successor]
            raise WouldCreateCycle(
                "dependency would create a cycle: " + " -> ".join(cycle),
                cycle=cycle,
            )
        dep = Dependency(predecessor, successor)
        self._edges.append(dep)
        self._succ.setdefault(predecessor, []).append(successor)
        self._pred.setdefault(successor, []).append(predecessor)
        return dep

    def remove_dependency(self, predecessor: str, successor: str) -> None:
        before = len(self._edges)
        self._edges = [e for e in self._edges
                       if not (e.predecessor == predecessor and e.successor == successor)]
        if len(self._edges) == before:
            raise UnknownMilestone(f"edge {predecessor!r} -> {successor!r} does not exist")
        self._succ[predecessor].remove(successor)
        self._pred[successor].remove(predecessor)

    def _find_path(self, src: str, dst: str) -> list[str] | None:
        """Deterministic DFS path src -> dst along successor edges, or None."""
        stack = [(src, [src])]
        seen = {src}
        while stack:
            node, path = stack.pop()
            if node == dst:
                return path
            for nxt in reversed(self._succ.get(node, ())):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append((nxt, path + [nxt]))
        return None

    # --- ordering ------------------------------------------------------

    def topological_order(self) -> list[str]:
        """Every predecessor before every successor; ties by insertion order."""
        index = {mid: i for i, mid in enumerate(self._milestones)}
        indegree = {mid: 0 for mid in self._milestones}
        for e in self._edges:
            indegree[e.successor] += 1
        ready = [index[mid] for mid, deg in indegree.items() if deg == 0]
        heapq.heapify(ready)
        ids = list(self._milestones)
        order: list[str] = []
        while ready:
            mid = ids[heapq.heappop(ready)]
            order.append(mid)
            for nxt in self._succ.get(mid, ()):
                indegree[nxt] -= 1
                if indegree[nxt] == 0:
                    heapq.heappush(ready, index[nxt])
        if len(order) != len(self._milestones):
            raise CyclicGraph("milestone graph contains a cycle")
        return order

    def is_acyclic(self) -> bool:
        try:
            self.topological_order()
            return True
        except CyclicGraph:
            return False

    def transitive_predecessors(self, milestone_id: str) -> set[str]:
        """Exact transitive closure of predecessor edges (excludes the node)."""
        self.milestone(milestone_id)
        out: set[str] = set()
        stack = list(self._pred.get(milestone_id, ()))
        while stack:
            node = stack.pop()
            if node not in out:
                out.add(node)
                stack.extend(self._pred.get(node, ()))
        return out

    # --- serialization ---------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "milestones": [m.to_json_dict() for m in self._milestones.values()],
            "dependencies": [e.to_json_dict() for e in self._edges],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "MilestoneGraph":
        g = cls()
        for rec in d.get("milestones", []):
            g.add_milestone(Milestone.from_json_dict(rec))
        for rec in d.get("dependencies", []):
            g.add_dependency(rec["predecessor"], rec["successor"])
        return g
