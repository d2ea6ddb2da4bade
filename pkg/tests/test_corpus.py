"""On-disk corpus, bug-dataset and catalog loaders."""

import json
from datetime import timezone

import pytest

from synth import localize_dataset, write_bug_dataset, write_project_corpus

from workbench.corpus import (
    corpus_fingerprint,
    dataset_fingerprint,
    load_api_catalog,
    load_bug_dataset,
    load_project_corpus,
)
from workbench.errors import DataError
from workbench.extraction import ProjectRecord


def _mk_project(root, pid, categories=("Video",), desc="a video tool",
                readme="usage notes", sources=(("Main.java", "class Main {}"),)):
    d = root / pid
    (d / "src").mkdir(parents=True)
    (d / "meta.json").write_text(
        json.dumps({"project_id": pid, "categories": list(categories)})
    )
    (d / "description.txt").write_text(desc)
    (d / "readme.txt").write_text(readme)
    for name, text in sources:
        (d / "src" / name).write_text(text)


def test_load_project_corpus(tmp_path):
    _mk_project(tmp_path, "alpha")
    _mk_project(tmp_path, "beta", categories=("Audio", "Video"))
    projects, errors = load_project_corpus(tmp_path)
    assert errors == []
    assert [p.project_id for p in projects] == ["alpha", "beta"]
    assert projects[1].categories == frozenset({"Audio", "Video"})
    assert projects[0].source_files[0][1] == "class Main {}"


def test_malformed_meta_collected_not_fatal(tmp_path):
    _mk_project(tmp_path, "good")
    bad = tmp_path / "bad"
    bad.mkdir()
    (bad / "meta.json").write_text("{not json")
    projects, errors = load_project_corpus(tmp_path)
    assert [p.project_id for p in projects] == ["good"]
    assert len(errors) == 1 and errors[0][0] == "bad"


def test_duplicate_project_id_fatal(tmp_path):
    _mk_project(tmp_path, "dir_one")
    _mk_project(tmp_path, "dir_two")
    meta = tmp_path / "dir_two" / "meta.json"
    meta.write_text(json.dumps({"project_id": "dir_one", "categories": ["X"]}))
    with pytest.raises(DataError):
        load_project_corpus(tmp_path)


def test_colon_in_project_id_rejected(tmp_path):
    _mk_project(tmp_path, "weird")
    meta = tmp_path / "weird" / "meta.json"
    meta.write_text(json.dumps({"project_id": "we:ird", "categories": ["X"]}))
    projects, errors = load_project_corpus(tmp_path)
    assert projects == [] and len(errors) == 1


def test_missing_optional_artifacts(tmp_path):
    d = tmp_path / "bare"
    d.mkdir()
    (d / "meta.json").write_text(json.dumps({"project_id": "bare", "categories": ["X"]}))
    projects, errors = load_project_corpus(tmp_path)
    assert errors == []
    (p,) = projects
    assert p.description == "" and p.readme == "" and p.source_files == ()


def _write_reports(root, rows):
    with open(root / "reports.jsonl", "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


_R1 = {
    "id": "r1", "summary": "s", "description": "d",
    "report_time": "2021-03-05T10:00:00Z", "fixed_files": ["A.java"],
}


def test_bug_dataset_shared_snapshot(tmp_path):
    _write_reports(tmp_path, [_R1])
    (tmp_path / "snapshot").mkdir()
    (tmp_path / "snapshot" / "A.java").write_text("class A {}")
    ds = load_bug_dataset(tmp_path)
    assert ds.reports[0].report_id == "r1"
    assert ds.reports[0].report_time.tzinfo == timezone.utc
    assert ds.snapshots["r1"] == {"A.java": "class A {}"}
    assert ds.snapshot_paths("r1") == frozenset({"A.java"})


def test_bug_dataset_per_report_dir_wins_over_shared(tmp_path):
    _write_reports(tmp_path, [_R1])
    (tmp_path / "snapshot").mkdir()
    (tmp_path / "snapshot" / "A.java").write_text("class Shared {}")
    per = tmp_path / "snapshots" / "r1"
    per.mkdir(parents=True)
    (per / "A.java").write_text("class PerReport {}")
    ds = load_bug_dataset(tmp_path)
    assert ds.snapshots["r1"]["A.java"] == "class PerReport {}"


def test_bug_dataset_listing_snapshot(tmp_path):
    _write_reports(tmp_path, [_R1])
    (tmp_path / "snapshots").mkdir()
    (tmp_path / "snapshots" / "r1.txt").write_text("A.java\nB.java\n")
    ds = load_bug_dataset(tmp_path)
    assert ds.snapshots["r1"] == {"A.java": "", "B.java": ""}


def test_bug_dataset_missing_snapshot(tmp_path):
    _write_reports(tmp_path, [_R1])
    with pytest.raises(DataError):
        load_bug_dataset(tmp_path)


def test_duplicate_report_id(tmp_path):
    _write_reports(tmp_path, [_R1, _R1])
    (tmp_path / "snapshot").mkdir()
    (tmp_path / "snapshot" / "A.java").write_text("class A {}")
    with pytest.raises(DataError):
        load_bug_dataset(tmp_path)


def test_report_time_normalized_to_utc(tmp_path):
    rows = [
        dict(_R1),
        {**_R1, "id": "r2", "report_time": "2021-03-05T12:00:00+02:00"},
        {**_R1, "id": "r3", "report_time": "2021-03-05T10:00:00"},  # naive
    ]
    _write_reports(tmp_path, rows)
    (tmp_path / "snapshot").mkdir()
    (tmp_path / "snapshot" / "A.java").write_text("class A {}")
    ds = load_bug_dataset(tmp_path)
    times = [r.report_time for r in ds.reports]
    assert times[0] == times[1] == times[2]  # all 10:00 UTC
    assert all(t.tzinfo == timezone.utc for t in times)


def test_bad_report_time_rejected(tmp_path):
    _write_reports(tmp_path, [{**_R1, "report_time": "yesterday-ish"}])
    (tmp_path / "snapshot").mkdir()
    (tmp_path / "snapshot" / "A.java").write_text("x")
    with pytest.raises(DataError):
        load_bug_dataset(tmp_path)


def test_api_catalog(tmp_path):
    p = tmp_path / "catalog.json"
    p.write_text(json.dumps({"Canvas": "draws things"}))
    assert load_api_catalog(p) == {"Canvas": "draws things"}
    p.write_text('{"A": "x", "A": "y"}')
    with pytest.raises(DataError):
        load_api_catalog(p)
    p.write_text('{"A": 3}')
    with pytest.raises(DataError):
        load_api_catalog(p)


def test_roundtrip_through_disk(tmp_path):
    """The in-memory fixture survives a write/load cycle unchanged."""
    ds, catalog = localize_dataset()
    root = write_bug_dataset(ds, catalog, tmp_path / "bugs")
    loaded = load_bug_dataset(root)
    assert [r.report_id for r in loaded.reports] == [r.report_id for r in ds.reports]
    assert loaded.reports[0].report_time == ds.reports[0].report_time
    assert loaded.snapshots["r01"] == ds.snapshots["r01"]
    assert load_api_catalog(root / "api_catalog.json") == catalog
    assert dataset_fingerprint(loaded) == dataset_fingerprint(ds)


def test_fingerprints_change_with_content(tmp_path):
    ds, _ = localize_dataset()
    base = dataset_fingerprint(ds)
    # same reports, one snapshot byte changed
    snap = dict(ds.snapshots[ds.reports[0].report_id])
    snap["core/Parser.java"] += " "
    altered = type(ds)(
        reports=ds.reports, snapshots={r.report_id: snap for r in ds.reports}
    )
    assert dataset_fingerprint(altered) != base

    projects = [
        ProjectRecord("p1", frozenset({"A"}), "desc", "readme", ()),
        ProjectRecord("p2", frozenset({"A"}), "desc", "readme", ()),
    ]
    f1 = corpus_fingerprint(projects)
    projects[1] = ProjectRecord("p2", frozenset({"B"}), "desc", "readme", ())
    assert corpus_fingerprint(projects) != f1


def test_write_project_corpus_roundtrip(tmp_path):
    projects = [
        ProjectRecord(
            "vidtool", frozenset({"Video"}), "records screen video",
            "build with make", (("src/Rec.java", "class Rec {}"),),
        ),
    ]
    root = write_project_corpus(projects, tmp_path / "corpus")
    loaded, errors = load_project_corpus(root)
    assert errors == []
    assert loaded[0].project_id == "vidtool"
    assert loaded[0].categories == frozenset({"Video"})
    assert loaded[0].source_files[0][1] == "class Rec {}"
