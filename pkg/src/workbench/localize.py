"""Bug localization: single-model ranking and the six-feature composite.

Per (report, file) the composite scores
  f1  report vs file content similarity,
  f2  report vs the file's API-usage descriptions,
  f3  report vs all earlier reports whose fixes touched the file,
  f4  length of the longest file-declared class name quoted in the report,
  f5  1/(1+m), m = whole months since the file's latest earlier fix,
  f6  number of earlier fixes touching the file,
min-max normalizes each feature across the report's candidate files,
and ranks by the weighted sum. History features only ever see reports
strictly earlier than the query (no leakage).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime
from functools import lru_cache
from typing import Sequence

import numpy as np

from workbench.corpus import BugDataset
from workbench.errors import ConfigError, DataError
from workbench.extraction import (
    BugReport,
    Document,
    GroundTruth,
    bug_ground_truth,
    bug_query_document,
    extract_java_facts,
)
from workbench.index import CorpusIndex, build_index
from workbench.metrics import EvalReport, evaluate_rankings
from workbench.models import (
    LOCALIZE_DEFAULTS,
    LatentSpace,
    ModelConfig,
    RankedList,
    lsi_fit,
    rank,
    scores_all,
)
from workbench.pipeline import PipelineConfig, default_config as default_pipeline, preprocess

__all__ = [
    "FixHistory",
    "LocalizeRun",
    "LocalizeTuneResult",
    "TOOLS",
    "TUNED_WEIGHTS",
    "build_fix_history",
    "composite_score",
    "normalize_features",
    "run_localization",
    "score_meta_features",
    "score_similarity_features",
    "tune_localizer_weights",
]

TOOLS = ("vsm-lr", "bm25-lr", "single-model")

# Weights found by the exhaustive grid search on the four benchmark
# projects; used as defaults when the caller names a known project.
TUNED_WEIGHTS: dict[str, dict[str, tuple[float, ...]]] = {
    "vsm-lr": {
        "birt": (5.0, 0.5, 5.5, 5.5, 1.5, 0.55),
        "eclipse_ui": (9.5, 0.95, 4.5, 6.5, 1.05, 0.75),
        "jdt": (4.5, 2.6, 5.5, 6.5, 1.05, 0.55),
        "swt": (4.2, 3.5, 4.7, 7.9, 0.05, 0.95),
    },
    "bm25-lr": {
        "birt": (2.4, 0.05, 3.5, 2.5, 0.6, 0.0),
        "eclipse_ui": (3.4, 0.05, 3.0, 2.5, 0.5, 0.0),
        "jdt": (1.2, 0.25, 2.5, 1.2, 0.3, 0.0),
        "swt": (4.4, 0.0, 3.5, 2.5, 0.3, 0.5),
    },
}

# Coordinate ranges for the weight search; the step is 5% of each range.
WEIGHT_RANGES: tuple[tuple[float, float], ...] = (
    (0.0, 10.0), (0.0, 10.0), (0.0, 10.0), (0.0, 10.0), (0.0, 2.0), (0.0, 2.0),
)
STEP_FRACTION = 0.05


def check_weights(weights: Sequence[float]) -> tuple[float, ...]:
    w = tuple(float(x) for x in weights)
    if len(w) != 6:
        raise ConfigError(f"expected 6 weights, got {len(w)}")
    if any(x < 0 for x in w):
        raise ConfigError(f"weights must be >= 0: {w}")
    if all(x == 0 for x in w):
        raise ConfigError("at least one weight must be positive")
    return w


# ------------------------------------------------------------- history


@dataclass
class FixHistory:
    """Per-file fix timeline plus each report's preprocessed tokens."""

    fixes_by_file: dict[str, tuple[tuple[datetime, str], ...]]  # time-sorted
    report_tokens: dict[str, tuple[str, ...]]
    report_times: dict[str, datetime]

    def prior_fixes(self, path: str, when: datetime) -> list[tuple[datetime, str]]:
        """Fixes of this file from reports strictly earlier than `when`."""
        return [(t, rid) for t, rid in self.fixes_by_file.get(path, ()) if t < when]


def build_fix_history(dataset: BugDataset, config: PipelineConfig | None = None) -> FixHistory:
    config = config or default_pipeline()
    fixes: dict[str, list[tuple[datetime, str]]] = {}
    tokens: dict[str, tuple[str, ...]] = {}
    times: dict[str, datetime] = {}
    for r in dataset.reports:
        times[r.report_id] = r.report_time
        text = f"{r.summary}\n{r.description}"
        tokens[r.report_id] = (
            tuple(preprocess(text, "bug_report", config)) if text.strip() else ()
        )
        for path in r.fixed_files:
            fixes.setdefault(path, []).append((r.report_time, r.report_id))
    return FixHistory(
        fixes_by_file={p: tuple(sorted(v)) for p, v in fixes.items()},
        report_tokens=tokens,
        report_times=times,
    )


# ------------------------------------------------------------- features


@lru_cache(maxsize=4096)
def _name_pattern(name: str) -> re.Pattern:
    return re.compile(rf"(?<![A-Za-z0-9_]){re.escape(name)}(?![A-Za-z0-9_])")


def _months_between(earlier: datetime, later: datetime) -> int:
    m = (later.year - earlier.year) * 12 + (later.month - earlier.month)
    return max(m, 0)


def score_meta_features(
    report: BugReport,
    declared_class_names: Sequence[str],
    path: str,
    history: FixHistory,
) -> tuple[float, float, float]:
    """(f4, f5, f6) for one candidate file.

    f4 = length of the longest declared class name occurring verbatim
    (identifier-bounded) in the report text, 0 if none; f5 = 1/(1+m)
    with m whole calendar months since the latest earlier fix, 0 for a
    never-fixed file; f6 = count of earlier fixes.
    """
    text = f"{report.summary}\n{report.description}"
    f4 = 0
    for name in declared_class_names:
        if len(name) > f4 and _name_pattern(name).search(text):
            f4 = len(name)
    prior = history.prior_fixes(path, report.report_time)
    if prior:
        latest = max(t for t, _ in prior)
        f5 = 1.0 / (1.0 + _months_between(latest, report.report_time))
    else:
        f5 = 0.0
    return float(f4), f5, float(len(prior))


def normalize_features(raw: np.ndarray) -> np.ndarray:
    """Min-max scale each column over the candidate files of one query;
    a constant column (no spread) normalizes to all zeros."""
    out = np.zeros_like(raw, dtype=np.float64)
    lo = raw.min(axis=0)
    hi = raw.max(axis=0)
    for j in range(raw.shape[1]):
        if hi[j] > lo[j]:
            out[:, j] = (raw[:, j] - lo[j]) / (hi[j] - lo[j])
    return out


def composite_score(features: Sequence[float], weights: Sequence[float]) -> float:
    """Weighted sum of the six (already normalized) feature values."""
    return float(np.dot(np.asarray(features, dtype=np.float64), np.asarray(weights, dtype=np.float64)))


@dataclass
class _SnapshotContext:
    paths: tuple[str, ...]  # sorted; candidate order everywhere
    source_tokens: dict[str, tuple[str, ...]]
    source_index: CorpusIndex
    source_space: LatentSpace | None
    f2_index: CorpusIndex | None  # None when no file has catalog hits
    f2_space: LatentSpace | None
    declared_names: dict[str, tuple[str, ...]]
    lsi_dims: dict[str, int] = field(default_factory=dict)


def _fit_space_clamped(index: CorpusIndex, config: ModelConfig, label: str, dims: dict) -> LatentSpace:
    k = min(config.lsi_dim, index.n_docs, index.n_terms)
    dims[label] = k
    return lsi_fit(index, k)


def _prepare_snapshot(
    snap: dict[str, str],
    catalog: dict[str, str],
    config: ModelConfig,
    pipeline_config: PipelineConfig,
) -> _SnapshotContext:
    paths = tuple(sorted(snap))
    if not paths:
        raise DataError("empty before-fix snapshot")
    source_docs = []
    f2_docs = []
    declared: dict[str, tuple[str, ...]] = {}
    src_tokens: dict[str, tuple[str, ...]] = {}
    for p in paths:
        text = snap[p]
        facts = extract_java_facts(text)
        declared[p] = tuple(sorted(set(facts.declared_classes)))
        toks = tuple(preprocess(text, "source_file", pipeline_config))
        src_tokens[p] = toks
        source_docs.append(Document(doc_id=p, kind="source_file", tokens=toks, missing=not text.strip()))
        api_text = " ".join(
            catalog[c] for c in sorted(set(facts.api_classes)) if c in catalog
        )
        f2_docs.append(
            Document(
                doc_id=p,
                kind="api_description",
                tokens=tuple(preprocess(api_text, "api_description", pipeline_config)),
                missing=not api_text,
            )
        )
    dims: dict[str, int] = {}
    source_index = build_index(list(source_docs), min_df=config.min_df, kind="source_file")
    source_space = None
    f2_index = None
    f2_space = None
    try:
        f2_index = build_index(list(f2_docs), min_df=config.min_df, kind="api_description")
    except DataError:
        f2_index = None  # nothing matched the catalog; f2 stays 0 everywhere
    if config.model == "lsi":
        source_space = _fit_space_clamped(source_index, config, "f1", dims)
        if f2_index is not None:
            f2_space = _fit_space_clamped(f2_index, config, "f2", dims)
    return _SnapshotContext(
        paths=paths,
        source_tokens=src_tokens,
        source_index=source_index,
        source_space=source_space,
        f2_index=f2_index,
        f2_space=f2_space,
        declared_names=declared,
        lsi_dims=dims,
    )


def _f3_scores(
    ctx: _SnapshotContext,
    history: FixHistory,
    query_tokens: Sequence[str],
    when: datetime,
    config: ModelConfig,
) -> np.ndarray:
    docs = []
    any_tokens = False
    for p in ctx.paths:
        toks: list[str] = []
        for _, rid in history.prior_fixes(p, when):
            toks.extend(history.report_tokens[rid])
        any_tokens = any_tokens or bool(toks)
        docs.append(Document(doc_id=p, kind="bug_report", tokens=tuple(toks), missing=not toks))
    if not any_tokens:
        return np.zeros(len(ctx.paths))
    try:
        f3_index = build_index(docs, min_df=config.min_df, kind="bug_report")
    except DataError:
        return np.zeros(len(ctx.paths))
    f3_space = None
    if config.model == "lsi":
        f3_space = lsi_fit(f3_index, min(config.lsi_dim, f3_index.n_docs, f3_index.n_terms))
    return scores_all(query_tokens, f3_index, config, f3_space)


@dataclass
class QueryFeatures:
    report_id: str
    paths: tuple[str, ...]
    raw: np.ndarray  # [n_files, 6]
    normalized: np.ndarray
    relevant: frozenset[str]


def _compute_query_features(
    report: BugReport,
    ctx: _SnapshotContext,
    history: FixHistory,
    config: ModelConfig,
    pipeline_config: PipelineConfig,
) -> QueryFeatures:
    qdoc = bug_query_document(report, pipeline_config)
    n = len(ctx.paths)
    raw = np.zeros((n, 6))
    raw[:, 0] = scores_all(qdoc.tokens, ctx.source_index, config, ctx.source_space)
    if ctx.f2_index is not None:
        raw[:, 1] = scores_all(qdoc.tokens, ctx.f2_index, config, ctx.f2_space)
    raw[:, 2] = _f3_scores(ctx, history, qdoc.tokens, report.report_time, config)
    for i, p in enumerate(ctx.paths):
        raw[i, 3:6] = score_meta_features(report, ctx.declared_names[p], p, history)
    return QueryFeatures(
        report_id=report.report_id,
        paths=ctx.paths,
        raw=raw,
        normalized=normalize_features(raw),
        relevant=bug_ground_truth(report, set(ctx.paths)),
    )


def score_similarity_features(
    report: BugReport,
    path: str,
    dataset: BugDataset,
    config: ModelConfig,
    catalog: dict[str, str] | None = None,
    pipeline_config: PipelineConfig | None = None,
) -> tuple[float, float, float]:
    """(f1, f2, f3) for one (report, file) pair, computed in the context
    of the report's full candidate snapshot (document statistics such as
    idf come from the other candidates)."""
    pipeline_config = pipeline_config or default_pipeline()
    snap = dataset.snapshots[report.report_id]
    if path not in snap:
        raise DataError(f"{path!r} is not in the snapshot of report {report.report_id}")
    ctx = _prepare_snapshot(snap, catalog or {}, config, pipeline_config)
    history = build_fix_history(dataset, pipeline_config)
    qf = _compute_query_features(report, ctx, history, config, pipeline_config)
    i = ctx.paths.index(path)
    return tuple(float(x) for x in qf.raw[i, 0:3])


# ----------------------------------------------------------------- runs


@dataclass
class LocalizeRun:
    tool: str
    config: ModelConfig
    weights: tuple[float, ...] | None
    report: EvalReport
    rankings: tuple[RankedList, ...]
    query_ids: tuple[str, ...]
    skipped: tuple[tuple[str, str], ...]
    audit_rows: tuple[dict, ...]
    query_features: tuple[QueryFeatures, ...] = ()


def _select_reports(dataset: BugDataset, query_limit: int | None) -> list[BugReport]:
    ordered = sorted(dataset.reports, key=lambda r: (r.report_time, r.report_id))
    if query_limit is not None and len(ordered) > query_limit:
        ordered = ordered[-query_limit:]  # the latest ones
    return ordered


def _resolve_tool(tool: str, config: ModelConfig | None) -> ModelConfig:
    if tool == "vsm-lr":
        return config or LOCALIZE_DEFAULTS["vsm"]
    if tool == "bm25-lr":
        return config or LOCALIZE_DEFAULTS["bm25"]
    if tool == "single-model":
        if config is None:
            raise ConfigError("single-model localization needs an explicit model config")
        return config
    raise ConfigError(f"unknown tool {tool!r}; expected one of {TOOLS}")


def run_localization(
    dataset: BugDataset,
    tool: str,
    config: ModelConfig | None = None,
    weights: Sequence[float] | None = None,
    k: int = 10,
    catalog: dict[str, str] | None = None,
    query_limit: int | None = 100,
    pipeline_config: PipelineConfig | None = None,
    embeddings=None,
    keep_features: bool = False,
) -> LocalizeRun:
    """Rank every before-fix file for each of the latest reports.

    Composite tools need six weights; ``single-model`` ranks by the
    model score alone. Reports whose fixed files all fall outside the
    snapshot (or with empty text) are excluded and logged.
    """
    config = _resolve_tool(tool, config)
    composite = tool != "single-model"
    if composite:
        if weights is None:
            raise ConfigError(f"{tool} needs six feature weights (or use the tuner)")
        weights = check_weights(weights)
    pipeline_config = pipeline_config or default_pipeline()
    catalog = catalog or {}
    history = build_fix_history(dataset, pipeline_config) if composite else None
    reports = _select_reports(dataset, query_limit)

    ctx_cache: dict[int, _SnapshotContext] = {}
    rankings: list[RankedList] = []
    truth = GroundTruth(relevant={})
    skipped: list[tuple[str, str]] = []
    audit: list[dict] = []
    features_kept: list[QueryFeatures] = []

    for r in reports:
        snap = dataset.snapshots[r.report_id]
        relevant = bug_ground_truth(r, set(snap))
        if not relevant:
            skipped.append((r.report_id, "no fixed file present in the before-fix snapshot"))
            continue
        try:
            qdoc = bug_query_document(r, pipeline_config)
        except DataError as exc:
            skipped.append((r.report_id, str(exc)))
            continue
        key = id(snap)
        ctx = ctx_cache.get(key)
        if ctx is None:
            ctx = ctx_cache[key] = _prepare_snapshot(snap, catalog, config, pipeline_config)

        if composite:
            qf = _compute_query_features(r, ctx, history, config, pipeline_config)
            scores = qf.normalized @ np.asarray(weights)
            entries = sorted(zip(ctx.paths, scores), key=lambda e: (-e[1], e[0]))
            ranked = RankedList(
                query_id=r.report_id,
                entries=tuple((p, float(s)) for p, s in entries),
            )
            rank_by_path = {p: i for i, (p, _) in enumerate(ranked.entries, start=1)}
            for i, p in enumerate(ctx.paths):
                audit.append(
                    {
                        "report_id": r.report_id,
                        "file": p,
                        "rank": rank_by_path[p],
                        "score": composite_score(qf.normalized[i], weights),
                        "relevant": p in relevant,
                        **{f"f{j + 1}": float(qf.raw[i, j]) for j in range(6)},
                        **{f"n{j + 1}": float(qf.normalized[i, j]) for j in range(6)},
                    }
                )
            if keep_features:
                features_kept.append(qf)
        else:
            ranked = rank(
                qdoc,
                config,
                index=ctx.source_index,
                space=ctx.source_space,
                embeddings=embeddings,
                docs_tokens=ctx.source_tokens if config.model == "wmd" else None,
            )
        truth.relevant[r.report_id] = relevant
        rankings.append(ranked)

    if not rankings:
        raise DataError("no evaluable reports (all were excluded)")
    report = evaluate_rankings(rankings, truth, k)
    return LocalizeRun(
        tool=tool,
        config=config,
        weights=tuple(weights) if weights is not None else None,
        report=report,
        rankings=tuple(rankings),
        query_ids=tuple(rl.query_id for rl in rankings),
        skipped=tuple(skipped),
        audit_rows=tuple(audit),
        query_features=tuple(features_kept),
    )


# ---------------------------------------------------------------- tuner


@dataclass
class LocalizeTuneResult:
    weights: tuple[float, ...]
    report: EvalReport
    trace: tuple[dict, ...]
    passes: int


def _grid(lo: float, hi: float, step: float) -> list[float]:
    n = round((hi - lo) / step)
    return [round(lo + j * step, 10) for j in range(n + 1)]


def _fast_eval(
    features: list[QueryFeatures],
    masks: list[np.ndarray],
    path_arrays: list[np.ndarray],
    weights: np.ndarray,
    k: int,
) -> tuple[float, float]:
    """(MAP@k, MRR) for one weight vector over precomputed features."""
    ap_sum = 0.0
    rr_sum = 0.0
    for qf, mask, paths in zip(features, masks, path_arrays):
        scores = qf.normalized @ weights
        order = np.lexsort((paths, -scores))
        rel = mask[order]
        hit_positions = np.flatnonzero(rel)
        if hit_positions.size:
            rr_sum += 1.0 / (hit_positions[0] + 1)
            in_k = hit_positions[hit_positions < k]
            ap_sum += float(
                np.sum(np.arange(1, in_k.size + 1) / (in_k + 1))
            ) / int(mask.sum())
    n = len(features)
    return ap_sum / n, rr_sum / n


def tune_localizer_weights(
    dataset: BugDataset,
    tool: str,
    config: ModelConfig | None = None,
    k: int = 10,
    catalog: dict[str, str] | None = None,
    query_limit: int | None = 100,
    pipeline_config: PipelineConfig | None = None,
    ranges: Sequence[tuple[float, float]] = WEIGHT_RANGES,
    step_fraction: float = STEP_FRACTION,
    max_passes: int = 10,
) -> LocalizeTuneResult:
    """Coordinate-wise grid search maximizing MAP@k.

    Each coordinate scans its range at steps of step_fraction x range
    while the others stay fixed, starting from the range midpoints;
    passes repeat until a full sweep changes nothing. Ties go to the
    higher MRR, then to the smaller weight value. The full trace of
    evaluated points is returned for audit.
    """
    config = _resolve_tool(tool, config)
    if tool == "single-model":
        raise ConfigError("tuning applies to the composite tools only")
    run = run_localization(
        dataset,
        tool,
        config=config,
        weights=tuple(1.0 for _ in ranges),
        k=k,
        catalog=catalog,
        query_limit=query_limit,
        pipeline_config=pipeline_config,
        keep_features=True,
    )
    features = list(run.query_features)
    masks = [
        np.array([p in qf.relevant for p in qf.paths], dtype=bool) for qf in features
    ]
    path_arrays = [np.array(qf.paths) for qf in features]

    weights = [round((lo + hi) / 2.0, 10) for lo, hi in ranges]
    trace: list[dict] = []
    passes = 0
    for _ in range(max_passes):
        passes += 1
        changed = False
        for ci, (lo, hi) in enumerate(ranges):
            step = round(step_fraction * (hi - lo), 10)
            best_key = None
            best_v = weights[ci]
            for v in _grid(lo, hi, step):
                if v == 0.0 and all(
                    weights[j] == 0.0 for j in range(len(weights)) if j != ci
                ):
                    continue  # the all-zero vector ranks nothing
                trial = np.array(weights[:ci] + [v] + weights[ci + 1:])
                m, rr = _fast_eval(features, masks, path_arrays, trial, k)
                trace.append(
                    {"weights": tuple(trial.tolist()), "map_at_k": m, "mrr": rr}
                )
                if best_key is None or (m, rr) > best_key:
                    best_key = (m, rr)
                    best_v = v
            if best_v != weights[ci]:
                weights[ci] = best_v
                changed = True
        if not changed:
            break

    final = tuple(weights)
    final_run = run_localization(
        dataset,
        tool,
        config=config,
        weights=final,
        k=k,
        catalog=catalog,
        query_limit=query_limit,
        pipeline_config=pipeline_config,
    )
    return LocalizeTuneResult(
        weights=final,
        report=final_run.report,
        trace=tuple(trace),
        passes=passes,
    )
