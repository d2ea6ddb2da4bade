"""Filesystem loaders for the project corpus and bug datasets.

Project corpus layout (one directory per project)::

    <root>/<dir>/meta.json        {"project_id": ..., "categories": [...]}
                 description.txt  (optional)
                 readme.txt       (optional)
                 src/**/*.java    (optional)

Bug dataset layout::

    <root>/reports.jsonl          one report object per line
           snapshots/<id>/        per-report before-fix sources, or
           snapshots/<id>.txt     per-report path listing (no contents), or
           snapshot/              shared before-fix sources for all reports
           api_catalog.json       {"ClassName": "description", ...} (optional)

A malformed ``meta.json`` is reported per-project and the load continues;
malformed ``reports.jsonl`` lines are hard errors (the dataset is a single
unit of evaluation).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from workbench.errors import DataError
from workbench.extraction import BugReport, ProjectRecord

__all__ = [
    "BugDataset",
    "corpus_fingerprint",
    "dataset_fingerprint",
    "load_api_catalog",
    "load_bug_dataset",
    "load_project_corpus",
]


def _read_text(path: Path) -> str:
    return path.read_bytes().decode("utf-8", errors="replace")


def _java_files(root: Path) -> list[tuple[str, str]]:
    """(relative posix path, text) for every .java under root, path-sorted."""
    out = []
    for p in sorted(root.rglob("*.java")):
        if p.is_file():
            out.append((p.relative_to(root).as_posix(), _read_text(p)))
    return out


def _load_meta(path: Path) -> tuple[str, frozenset[str]]:
    try:
        meta = json.loads(_read_text(path))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"unreadable meta.json: {exc}") from exc
    if not isinstance(meta, dict):
        raise DataError("meta.json must be a JSON object")
    pid = meta.get("project_id")
    if not isinstance(pid, str) or not pid.strip():
        raise DataError("meta.json missing non-empty 'project_id'")
    if ":" in pid:
        raise DataError(f"project_id may not contain ':' (reserved): {pid!r}")
    cats = meta.get("categories")
    if not isinstance(cats, list) or any(not isinstance(c, str) for c in cats):
        raise DataError("meta.json 'categories' must be a list of strings")
    return pid.strip(), frozenset(c.strip() for c in cats if c.strip())


def load_project_corpus(root: str | Path) -> tuple[list[ProjectRecord], list[tuple[str, str]]]:
    """Load every project directory under root.

    Returns (projects, errors) where errors is a list of
    (directory name, message) for projects that failed to load; callers
    log these and continue. Raises DataError only for root-level
    problems (missing root, no projects at all, duplicate ids).
    """
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"corpus root is not a directory: {root}")
    projects: list[ProjectRecord] = []
    errors: list[tuple[str, str]] = []
    seen: dict[str, str] = {}
    for d in sorted(p for p in root.iterdir() if p.is_dir()):
        meta_path = d / "meta.json"
        if not meta_path.is_file():
            errors.append((d.name, "missing meta.json"))
            continue
        try:
            pid, cats = _load_meta(meta_path)
        except DataError as exc:
            errors.append((d.name, str(exc)))
            continue
        if pid in seen:
            raise DataError(
                f"duplicate project_id {pid!r} in {d.name} and {seen[pid]}"
            )
        seen[pid] = d.name
        desc = _read_text(d / "description.txt") if (d / "description.txt").is_file() else ""
        readme = _read_text(d / "readme.txt") if (d / "readme.txt").is_file() else ""
        src_dir = d / "src"
        files = tuple(_java_files(src_dir)) if src_dir.is_dir() else ()
        projects.append(
            ProjectRecord(
                project_id=pid,
                categories=cats,
                description=desc,
                readme=readme,
                source_files=files,
            )
        )
    if not projects and not errors:
        raise DataError(f"no project directories under {root}")
    return projects, errors


def _parse_report_time(raw: str, where: str) -> datetime:
    # datetime.fromisoformat on 3.10 rejects a trailing 'Z'; normalize it.
    try:
        dt = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except (ValueError, AttributeError, TypeError) as exc:
        raise DataError(f"{where}: bad report_time {raw!r}: {exc}") from exc
    # times without an offset are taken as UTC so the whole dataset is
    # comparable (naive vs aware datetimes cannot be ordered)
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def _parse_report_line(line: str, lineno: int) -> BugReport:
    where = f"reports.jsonl line {lineno}"
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataError(f"{where}: invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise DataError(f"{where}: expected a JSON object")
    rid = obj.get("id")
    if not isinstance(rid, str) or not rid.strip():
        raise DataError(f"{where}: missing non-empty 'id'")
    fixed = obj.get("fixed_files")
    if not isinstance(fixed, list) or any(not isinstance(f, str) for f in fixed):
        raise DataError(f"{where}: 'fixed_files' must be a list of strings")
    return BugReport(
        report_id=rid.strip(),
        summary=str(obj.get("summary") or ""),
        description=str(obj.get("description") or ""),
        report_time=_parse_report_time(obj.get("report_time"), where),
        fixed_files=frozenset(fixed),
    )


@dataclass
class BugDataset:
    """Reports in file order plus each report's before-fix snapshot
    (path -> source text; text is empty when only a listing was given)."""

    reports: tuple[BugReport, ...]
    snapshots: dict[str, dict[str, str]]

    def snapshot_paths(self, report_id: str) -> frozenset[str]:
        return frozenset(self.snapshots[report_id])


def _load_snapshot(root: Path, report_id: str) -> dict[str, str] | None:
    per_dir = root / "snapshots" / report_id
    if per_dir.is_dir():
        return dict(_java_files(per_dir))
    listing = root / "snapshots" / f"{report_id}.txt"
    if listing.is_file():
        paths = [ln.strip() for ln in _read_text(listing).splitlines() if ln.strip()]
        return {p: "" for p in paths}
    return None


def load_bug_dataset(root: str | Path) -> BugDataset:
    root = Path(root)
    reports_path = root / "reports.jsonl"
    if not reports_path.is_file():
        raise DataError(f"missing {reports_path}")
    reports: list[BugReport] = []
    seen: set[str] = set()
    for lineno, line in enumerate(_read_text(reports_path).splitlines(), start=1):
        if not line.strip():
            continue
        r = _parse_report_line(line, lineno)
        if r.report_id in seen:
            raise DataError(f"duplicate report id {r.report_id!r}")
        seen.add(r.report_id)
        reports.append(r)
    if not reports:
        raise DataError(f"no reports in {reports_path}")

    shared = None
    if (root / "snapshot").is_dir():
        shared = dict(_java_files(root / "snapshot"))
    snapshots: dict[str, dict[str, str]] = {}
    for r in reports:
        snap = _load_snapshot(root, r.report_id)
        if snap is None:
            snap = shared
        if snap is None:
            raise DataError(
                f"report {r.report_id}: no snapshots/{r.report_id} directory, "
                f"no snapshots/{r.report_id}.txt listing, and no shared snapshot/"
            )
        snapshots[r.report_id] = snap
    return BugDataset(reports=tuple(reports), snapshots=snapshots)


def _reject_duplicate_keys(pairs):
    seen = set()
    for key, _ in pairs:
        if key in seen:
            raise DataError(f"api catalog: duplicate class name {key!r}")
        seen.add(key)
    return dict(pairs)


def load_api_catalog(path: str | Path) -> dict[str, str]:
    path = Path(path)
    try:
        catalog = json.loads(_read_text(path), object_pairs_hook=_reject_duplicate_keys)
    except OSError as exc:
        raise DataError(f"unreadable api catalog {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"api catalog {path}: invalid JSON: {exc}") from exc
    if not isinstance(catalog, dict) or any(
        not isinstance(v, str) for v in catalog.values()
    ):
        raise DataError(f"api catalog {path}: expected a JSON object of strings")
    return catalog


def dataset_fingerprint(dataset: BugDataset) -> str:
    """Stable content hash over reports and snapshots, for manifests."""
    h = hashlib.sha256()
    for r in dataset.reports:
        h.update(r.report_id.encode())
        h.update(b"\x00")
        h.update(r.summary.encode())
        h.update(b"\x00")
        h.update(r.description.encode())
        h.update(b"\x00")
        h.update(r.report_time.isoformat().encode())
        h.update(b"\x00")
        for f in sorted(r.fixed_files):
            h.update(f.encode())
            h.update(b"\x01")
        snap = dataset.snapshots[r.report_id]
        for path in sorted(snap):
            h.update(path.encode())
            h.update(b"\x02")
            h.update(snap[path].encode())
            h.update(b"\x00")
    return h.hexdigest()


def corpus_fingerprint(projects: list[ProjectRecord]) -> str:
    """Stable content hash over project ids, categories, and artifact text;
    embedded in run manifests so results are traceable to their inputs."""
    h = hashlib.sha256()
    for p in sorted(projects, key=lambda p: p.project_id):
        h.update(p.project_id.encode())
        h.update(b"\x00")
        for c in sorted(p.categories):
            h.update(c.encode())
            h.update(b"\x01")
        h.update(p.description.encode())
        h.update(b"\x00")
        h.update(p.readme.encode())
        h.update(b"\x00")
        for path, text in p.source_files:
            h.update(path.encode())
            h.update(b"\x02")
            h.update(text.encode())
            h.update(b"\x00")
    return h.hexdigest()
