"""Command-line experiment runner.

Subcommands chain extraction -> indexing -> models -> metrics ->
composite tools. Every run that writes results also writes a manifest
whose hash is embedded in each output file; re-running an identical
configuration reproduces the outputs byte for byte.

Exit codes: 0 success, 2 configuration error, 3 data error. Fatal
errors print one machine-readable JSON object to stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

from workbench.corpus import (
    corpus_fingerprint,
    dataset_fingerprint,
    load_api_catalog,
    load_bug_dataset,
    load_project_corpus,
)
from workbench.errors import ConfigError, DataError, WorkbenchError
from workbench.extraction import ARTIFACT_KINDS, GroundTruth
from workbench.index import build_index, index_config_hash, load_index
from workbench.manifest import build_manifest
from workbench.metrics import evaluate_rankings, write_report_csv, write_report_json
from workbench.models import (
    MODEL_NAMES,
    ModelConfig,
    RankedList,
    default_config,
    lsi_fit,
    scores_all,
    with_overrides,
)
from workbench.pipeline import KINDS, default_config as default_pipeline, pipeline_fingerprint, preprocess
from workbench.recommend import (
    build_feature_documents,
    run_clan_experiment,
    run_feature_experiment,
    tune_clan_weights,
)
from workbench.localize import (
    TOOLS,
    TUNED_WEIGHTS,
    run_localization,
    tune_localizer_weights,
)

__all__ = ["main"]

# Tuned composite-recommender weights (package, api) per model.
CLAN_DEFAULT_WEIGHTS = {"lsi": (0.9, 0.1), "vsm": (0.6, 0.4)}


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_model_config(args, task: str) -> ModelConfig:
    """Task defaults, then --config file entries, then explicit flags."""
    config = default_config(args.model, task)
    overrides = {}
    if getattr(args, "config", None):
        try:
            file_overrides = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"unreadable config file {args.config}: {exc}") from exc
        if not isinstance(file_overrides, dict):
            raise ConfigError(f"config file {args.config} must hold a JSON object")
        unknown = set(file_overrides) - {f.name for f in dataclasses.fields(ModelConfig)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        overrides.update(file_overrides)
    for flag, key in (("min_df", "min_df"), ("k1", "k1"), ("k2", "k2"),
                      ("b", "b"), ("lsi_dim", "lsi_dim"),
                      ("embeddings", "embedding_path")):
        val = getattr(args, flag, None)
        if val is not None:
            overrides[key] = val
    overrides.pop("model", None)
    return with_overrides(config, **overrides) if overrides else config


def _load_embeddings_if_needed(config: ModelConfig):
    if config.model != "wmd":
        return None
    if not config.embedding_path:
        raise ConfigError("the wmd model needs --embeddings FILE (word2vec text format)")
    from workbench.embeddings import load_word2vec_text

    return load_word2vec_text(config.embedding_path)


def _report_corpus_errors(errors) -> None:
    for name, msg in errors:
        print(f"warning: project {name!r} skipped: {msg}", file=sys.stderr)


def _config_snapshot(config: ModelConfig) -> dict:
    return dataclasses.asdict(config)


# ------------------------------------------------------------- extract


def cmd_extract(args) -> int:
    projects, errors = load_project_corpus(args.corpus)
    _report_corpus_errors(errors)
    if not projects:
        raise DataError(f"no loadable projects under {args.corpus}")
    out = _out_dir(args)
    pipeline = default_pipeline()
    manifest = build_manifest(
        command="extract",
        config={"corpus": str(args.corpus)},
        pipeline_config=pipeline,
        corpus_fingerprint=corpus_fingerprint(projects),
    )
    docs_dir = out / "docs"
    docs_dir.mkdir(exist_ok=True)
    cache: dict = {}
    n = 0
    for kind in ARTIFACT_KINDS:
        for p, doc in zip(projects, build_feature_documents(projects, kind, pipeline, cache)):
            _write_json(
                docs_dir / f"{p.project_id}__{kind}.json",
                {
                    "doc_id": doc.doc_id,
                    "kind": doc.kind,
                    "tokens": list(doc.tokens),
                    "missing": doc.missing,
                    "manifest_hash": manifest.hash,
                },
            )
            n += 1
    if errors:
        _write_json(
            out / "extract_errors.json",
            {"manifest_hash": manifest.hash,
             "errors": [{"project_dir": d, "message": m} for d, m in errors]},
        )
    manifest.save(out / "manifest.json")
    print(json.dumps({"documents": n, "errors": len(errors), "manifest_hash": manifest.hash}))
    return 0


# --------------------------------------------------------------- index


def cmd_index(args) -> int:
    projects, errors = load_project_corpus(args.corpus)
    _report_corpus_errors(errors)
    if not projects:
        raise DataError(f"no loadable projects under {args.corpus}")
    pipeline = default_pipeline()
    docs = build_feature_documents(projects, args.feature, pipeline)
    chash = index_config_hash(pipeline_fingerprint(pipeline), args.feature, args.min_df)
    index = build_index(docs, min_df=args.min_df, kind=args.feature, config_hash=chash)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    index.save(out)
    manifest = build_manifest(
        command="index",
        config={"feature": args.feature, "min_df": args.min_df, "config_hash": chash},
        pipeline_config=pipeline,
        corpus_fingerprint=corpus_fingerprint(projects),
    )
    manifest.save(out.with_suffix(out.suffix + ".manifest.json"))
    print(json.dumps({"docs": index.n_docs, "terms": index.n_terms, "manifest_hash": manifest.hash}))
    return 0


# --------------------------------------------------------------- query


def cmd_query(args) -> int:
    index = load_index(args.index)
    pipeline = default_pipeline()
    expected = index_config_hash(pipeline_fingerprint(pipeline), index.kind, index.min_df)
    if index.config_hash and index.config_hash != expected:
        raise ConfigError(
            f"index was built under config hash {index.config_hash!r} but the current "
            f"pipeline/config hashes to {expected!r}; rebuild the index before querying"
        )
    config = _load_model_config(args, task="recommend")
    if config.model == "wmd":
        raise ConfigError(
            "the query command scores against a frozen index (vsm/bm25/lsi); "
            "embedding-distance ranking needs raw documents - use the experiment commands"
        )
    kind = args.kind or index.kind or "bug_report"
    if kind not in KINDS:
        raise ConfigError(f"unknown kind {kind!r}; expected one of {KINDS}")
    tokens = preprocess(args.text, kind, pipeline)
    space = None
    if config.model == "lsi":
        space = lsi_fit(index, min(config.lsi_dim, index.n_docs, index.n_terms))
    scores = scores_all(tokens, index, config, space)
    order = sorted(zip(index.doc_ids, scores), key=lambda e: (-e[1], e[0]))[: args.k]
    manifest = build_manifest(
        command="query",
        config={"model": _config_snapshot(config), "kind": kind, "k": args.k,
                "index_config_hash": index.config_hash},
        pipeline_config=pipeline,
        corpus_fingerprint=index.config_hash or "",
    )
    payload = {
        "manifest_hash": manifest.hash,
        "k": args.k,
        "results": [
            {"rank": i, "doc_id": d, "score": float(s)}
            for i, (d, s) in enumerate(order, start=1)
        ],
    }
    print(json.dumps(payload, indent=2))
    if args.out:
        out = _out_dir(args)
        _write_json(out / "results.json", payload)
        manifest.save(out / "manifest.json")
    return 0


# ------------------------------------------------------------ evaluate


def cmd_evaluate(args) -> int:
    try:
        rankings_doc = json.loads(Path(args.rankings).read_text())
        truth_doc = json.loads(Path(args.truth).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"unreadable input: {exc}") from exc
    if not isinstance(rankings_doc, dict) or not isinstance(truth_doc, dict):
        raise DataError("rankings and truth files must hold JSON objects keyed by query id")
    rankings = []
    for qid, entries in sorted(rankings_doc.items()):
        if qid not in truth_doc:
            raise DataError(f"query {qid!r} has rankings but no ground truth")
        rankings.append(
            RankedList(
                query_id=qid,
                entries=tuple((str(d), float(s)) for d, s in entries),
            )
        )
    truth = GroundTruth(
        relevant={q: frozenset(v) for q, v in truth_doc.items()}
    )
    report = evaluate_rankings(rankings, truth, args.k)
    pipeline = default_pipeline()
    manifest = build_manifest(
        command="evaluate",
        config={"k": args.k, "rankings": str(args.rankings), "truth": str(args.truth)},
        pipeline_config=pipeline,
        corpus_fingerprint="",
    )
    out = _out_dir(args)
    write_report_csv(report, out / "metrics.csv", manifest.hash)
    write_report_json(report, out / "aggregate.json", manifest.hash)
    manifest.save(out / "manifest.json")
    print(json.dumps({"manifest_hash": manifest.hash, **report.aggregates()}))
    return 0


# ----------------------------------------------------------- recommend


def _query_count(args) -> int | None:
    return None if args.queries == 0 else args.queries


def cmd_recommend(args) -> int:
    projects, errors = load_project_corpus(args.corpus)
    _report_corpus_errors(errors)
    if not projects:
        raise DataError(f"no loadable projects under {args.corpus}")
    pipeline = default_pipeline()
    out = _out_dir(args)
    fingerprint = corpus_fingerprint(projects)

    if args.composite:
        if args.composite != "clan":
            raise ConfigError(f"unknown composite {args.composite!r}; only 'clan' exists")
        if args.model not in ("lsi", "vsm"):
            raise ConfigError("the composite recommender supports --model lsi or vsm")
        config = _load_model_config(args, task="recommend")
        common = dict(
            k=args.k, query_count=_query_count(args), seed=args.seed,
            pipeline_config=pipeline,
        )
        if args.tune:
            result = tune_clan_weights(projects, config, grid_step=args.grid_step, **common)
            w_pkg, w_api = result.w_pkg, result.w_api
            report = result.report
            trace = result.trace
            skipped = ()
        else:
            w_pkg, w_api = args.w_pkg, args.w_api
            if w_pkg is None or w_api is None:
                w_pkg, w_api = CLAN_DEFAULT_WEIGHTS[args.model]
            run = run_clan_experiment(projects, config, w_pkg, w_api, **common)
            report = run.report
            trace = None
            skipped = run.skipped
        manifest = build_manifest(
            command="recommend",
            config={
                "composite": "clan", "model": _config_snapshot(config),
                "w_pkg": w_pkg, "w_api": w_api, "k": args.k,
                "queries": args.queries, "tuned": bool(args.tune),
                "grid_step": args.grid_step if args.tune else None,
            },
            pipeline_config=pipeline,
            corpus_fingerprint=fingerprint,
            seed=args.seed,
        )
        if trace is not None:
            _write_json(out / "tune_trace.json",
                        {"manifest_hash": manifest.hash, "grid": list(trace)})
    else:
        if not args.feature:
            raise ConfigError("either --feature KIND or --composite clan is required")
        config = _load_model_config(args, task="recommend")
        embeddings = _load_embeddings_if_needed(config)
        run = run_feature_experiment(
            projects, args.feature, config, k=args.k,
            query_count=_query_count(args), seed=args.seed,
            embeddings=embeddings, pipeline_config=pipeline,
        )
        report = run.report
        skipped = run.skipped
        manifest = build_manifest(
            command="recommend",
            config={
                "feature": args.feature, "model": _config_snapshot(config),
                "k": args.k, "queries": args.queries,
                "lsi_dim_used": run.lsi_dim_used,
            },
            pipeline_config=pipeline,
            corpus_fingerprint=fingerprint,
            seed=args.seed,
        )

    write_report_csv(report, out / "metrics.csv", manifest.hash)
    write_report_json(report, out / "aggregate.json", manifest.hash)
    if skipped:
        _write_json(out / "skipped_queries.json",
                    {"manifest_hash": manifest.hash,
                     "skipped": [{"project_id": p, "reason": r} for p, r in skipped]})
    manifest.save(out / "manifest.json")
    print(json.dumps({"manifest_hash": manifest.hash, **report.aggregates()}))
    return 0


# ------------------------------------------------------------ localize


def _localizer_weights(args) -> tuple[float, ...] | None:
    if args.weights is not None:
        return tuple(args.weights)
    presets = TUNED_WEIGHTS.get(args.tool, {})
    if args.project in presets:
        return presets[args.project]
    return None


def cmd_localize(args) -> int:
    dataset = load_bug_dataset(args.data)
    catalog = {}
    catalog_path = args.catalog or (Path(args.data) / "api_catalog.json")
    if Path(catalog_path).is_file():
        catalog = load_api_catalog(catalog_path)
    pipeline = default_pipeline()
    out = _out_dir(args)
    fingerprint = dataset_fingerprint(dataset)

    config = None
    if args.model:
        config = _load_model_config(args, task="localize")
    common = dict(
        config=config, k=args.k, catalog=catalog,
        query_limit=_query_count(args), pipeline_config=pipeline,
    )
    trace = None
    if args.tune:
        result = tune_localizer_weights(dataset, args.tool, **common)
        weights = result.weights
        report = result.report
        trace = result.trace
        skipped = ()
        audit = ()
    else:
        weights = None
        if args.tool != "single-model":
            weights = _localizer_weights(args)
            if weights is None:
                raise ConfigError(
                    f"{args.tool} needs --weights W1..W6, --tune, or a --project "
                    f"with shipped tuned weights ({sorted(TUNED_WEIGHTS.get(args.tool, {}))})"
                )
        embeddings = _load_embeddings_if_needed(config) if config else None
        run = run_localization(
            dataset, args.tool, weights=weights, embeddings=embeddings, **common
        )
        report = run.report
        skipped = run.skipped
        audit = run.audit_rows
        config = run.config

    manifest = build_manifest(
        command="localize",
        config={
            "tool": args.tool, "project": args.project,
            "model": _config_snapshot(config) if config else None,
            "weights": list(weights) if weights else None,
            "k": args.k, "queries": args.queries, "tuned": bool(args.tune),
        },
        pipeline_config=pipeline,
        corpus_fingerprint=fingerprint,
    )
    write_report_csv(report, out / "metrics.csv", manifest.hash)
    write_report_json(report, out / "aggregate.json", manifest.hash)
    if audit:
        with open(out / "features_audit.csv", "w", newline="") as fh:
            fields = list(audit[0].keys()) + ["manifest_hash"]
            w = csv.DictWriter(fh, fieldnames=fields)
            w.writeheader()
            for row in audit:
                w.writerow({**row, "manifest_hash": manifest.hash})
    if skipped:
        _write_json(out / "skipped_reports.json",
                    {"manifest_hash": manifest.hash,
                     "skipped": [{"report_id": r, "reason": m} for r, m in skipped]})
    if trace is not None:
        _write_json(out / "tune_trace.json",
                    {"manifest_hash": manifest.hash,
                     "weights": list(weights), "grid": list(trace)})
    manifest.save(out / "manifest.json")
    print(json.dumps({"manifest_hash": manifest.hash,
                      "weights": list(weights) if weights else None,
                      **report.aggregates()}))
    return 0


# ------------------------------------------------------------- parsing


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of model-config overrides")
    p.add_argument("--min-df", dest="min_df", type=int, help="vocabulary document-frequency floor")
    p.add_argument("--k1", type=float, help="BM25 k1")
    p.add_argument("--k2", type=float, help="BM25 k2 (query-side saturation)")
    p.add_argument("--b", type=float, help="BM25 length-normalization strength")
    p.add_argument("--lsi-dim", dest="lsi_dim", type=int, help="latent dimensionality")
    p.add_argument("--embeddings", help="word2vec text file (embedding-distance model)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="workbench",
        description="Retrieval workbench for software-engineering artifacts",
    )
    sub = p.add_subparsers(dest="command", required=True)

    px = sub.add_parser("extract", help="preprocess a project corpus into artifact documents")
    px.add_argument("--corpus", required=True)
    px.add_argument("--out", required=True)
    px.set_defaults(func=cmd_extract)

    pi = sub.add_parser("index", help="build and persist one artifact-kind index")
    pi.add_argument("--corpus", required=True)
    pi.add_argument("--feature", required=True, choices=ARTIFACT_KINDS)
    pi.add_argument("--min-df", dest="min_df", type=int, default=2)
    pi.add_argument("--out", required=True, help="output .npz path")
    pi.set_defaults(func=cmd_index)

    pq = sub.add_parser("query", help="rank indexed documents for an ad-hoc query")
    pq.add_argument("--index", required=True)
    pq.add_argument("--model", default="vsm", choices=MODEL_NAMES)
    pq.add_argument("--text", required=True)
    pq.add_argument("--kind", help="pipeline branch for the query text")
    pq.add_argument("--k", type=int, default=10)
    pq.add_argument("--out")
    _add_model_flags(pq)
    pq.set_defaults(func=cmd_query)

    pe = sub.add_parser("evaluate", help="score canned rankings against ground truth")
    pe.add_argument("--rankings", required=True)
    pe.add_argument("--truth", required=True)
    pe.add_argument("--k", type=int, default=10)
    pe.add_argument("--out", required=True)
    pe.set_defaults(func=cmd_evaluate)

    pr = sub.add_parser("recommend", help="project-recommendation experiments")
    pr.add_argument("--corpus", required=True)
    pr.add_argument("--feature", choices=ARTIFACT_KINDS)
    pr.add_argument("--composite", choices=["clan"])
    pr.add_argument("--model", default="vsm", choices=MODEL_NAMES)
    pr.add_argument("--k", type=int, default=10)
    pr.add_argument("--queries", type=int, default=200, help="query-set size (0 = all eligible)")
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--w-pkg", dest="w_pkg", type=float)
    pr.add_argument("--w-api", dest="w_api", type=float)
    pr.add_argument("--tune", action="store_true")
    pr.add_argument("--grid-step", dest="grid_step", type=float, default=0.1)
    pr.add_argument("--out", required=True)
    _add_model_flags(pr)
    pr.set_defaults(func=cmd_recommend)

    pl = sub.add_parser("localize", help="bug-localization experiments")
    pl.add_argument("--data", required=True, help="bug dataset directory")
    pl.add_argument("--project", default="", help="dataset label; selects shipped tuned weights")
    pl.add_argument("--tool", required=True, choices=TOOLS)
    pl.add_argument("--model", choices=MODEL_NAMES, help="model for single-model runs or feature override")
    pl.add_argument("--weights", nargs=6, type=float, metavar="W")
    pl.add_argument("--tune", action="store_true")
    pl.add_argument("--k", type=int, default=10)
    pl.add_argument("--queries", type=int, default=100, help="latest-N reports (0 = all)")
    pl.add_argument("--catalog", help="API catalog JSON (default: DATA/api_catalog.json)")
    pl.add_argument("--out", required=True)
    _add_model_flags(pl)
    pl.set_defaults(func=cmd_localize)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    except WorkbenchError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
