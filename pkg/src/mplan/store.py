"""File-backed, append-only plan store with optimistic concurrency.

One directory per plan, one immutable JSON file per version. Writes go
through a temp file that is fsynced and then hard-linked into place, so an
interrupted write can never surface as a committed version: recovery sees
exactly the versions whose link happened. Version tokens are integers that
strictly increase per plan; a stale ``base_version`` is rejected with
:class:`VersionConflict`.
"""

from __future__ import annotations

import json
import os
import re
import threading
from pathlib import Path

from .errors import (
    StorageFailure,
    UnknownPlan,
    ValidationRejected,
    VersionConflict,
    errors_only,
)
from .plan import Plan

_VERSION_RE = re.compile(r"^v(\d{6})\.json$")
_PLAN_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


def _validate_for_persist(plan: Plan) -> None:
    findings = errors_only(plan.validate_backlog() + plan.validate_matrix())
    if findings:
        raise ValidationRejected("plan has structural errors", violations=findings)
    if not plan.graph.is_acyclic():
        raise ValidationRejected("milestone graph contains a cycle", violations=[])


class PlanStore:
    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    # --- layout helpers --------------------------------------------------

    def _plan_dir(self, plan_id: str) -> Path:
        if not _PLAN_ID_RE.match(plan_id):
            raise UnknownPlan(f"bad plan id {plan_id!r}")
        return self.root / plan_id

    @staticmethod
    def _version_path(plan_dir: Path, version: int) -> Path:
        return plan_dir / f"v{version:06d}.json"

    # --- reads -----------------------------------------------------------

    def plan_ids(self) -> list[str]:
        out = []
        for child in sorted(self.root.iterdir()):
            if child.is_dir() and self.versions(child.name):
                out.append(child.name)
        return out

    def versions(self, plan_id: str) -> list[int]:
        plan_dir = self._plan_dir(plan_id)
        if not plan_dir.is_dir():
            return []
        found = []
        for child in plan_dir.iterdir():
            m = _VERSION_RE.match(child.name)
            if m:
                found.append(int(m.group(1)))
        return sorted(found)

    def latest_version(self, plan_id: str) -> int:
        versions = self.versions(plan_id)
        if not versions:
            raise UnknownPlan(f"plan {plan_id!r} does not exist")
        return versions[-1]

    def load(self, plan_id: str, version: int | None = None) -> tuple[Plan, int]:
        if version is None:
            version = self.latest_version(plan_id)
        path = self._version_path(self._plan_dir(plan_id), version)
        if not path.is_file():
            raise UnknownPlan(f"plan {plan_id!r} has no version {version}")
        try:
            return Plan.loads(path.read_text(encoding="utf-8")), version
        except json.JSONDecodeError as exc:  # pragma: no cover - link protocol prevents this
            raise StorageFailure(f"corrupt version file {path}: {exc}") from exc

    # --- writes ----------------------------------------------------------

    def _write_version(self, plan_dir: Path, version: int, plan: Plan) -> int:
        final = self._version_path(plan_dir, version)
        tmp = plan_dir / f".v{version:06d}.json.tmp-{os.getpid()}-{threading.get_ident()}"
        data = plan.dumps().encode("utf-8")
        fd = os.open(tmp, os.O_WRONLY | os.O_CREAT | os.O_EXCL, 0o644)
        try:
            os.write(fd, data)
            os.fsync(fd)
        finally:
            os.close(fd)
        try:
            os.link(tmp, final)  # atomic and exclusive: loser of a race gets EEXIST
        except FileExistsError:
            raise VersionConflict(f"version {version} was committed concurrently")
        finally:
            os.unlink(tmp)
        dir_fd = os.open(plan_dir, os.O_RDONLY)
        try:
            os.fsync(dir_fd)
        finally:
            os.close(dir_fd)
        return version

    def create_plan(self, plan: Plan, plan_id: str | None = None) -> tuple[str, int]:
        _validate_for_persist(plan)
        with self._lock:
            if plan_id is None:
                taken = set(self.plan_ids())
                n = 1
                while f"plan-{n:04d}" in taken:
                    n += 1
                plan_id = f"plan-{n:04d}"
            plan_dir = self._plan_dir(plan_id)
            if self.versions(plan_id):
                raise VersionConflict(f"plan {plan_id!r} already exists")
            plan_dir.mkdir(parents=True, exist_ok=True)
            version = self._write_version(plan_dir, 1, plan)
            return plan_id, version

    def commit(self, plan_id: str, base_version: int, plan: Plan) -> int:
        """Append a new version if ``base_version`` is still the latest."""
        _validate_for_persist(plan)
        plan_dir = self._plan_dir(plan_id)
        with self._lock:
            latest = self.latest_version(plan_id)
            if base_version != latest:
                raise VersionConflict(
                    f"plan {plan_id!r} is at version {latest}, not {base_version}")
            return self._write_version(plan_dir, latest + 1, plan)
