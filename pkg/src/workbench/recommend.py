"""Project-recommendation experiments.

Single-feature runs rank every other project by one artifact kind under
one model; the composite recommender mixes the package-import and API
similarities with tunable weights. Relevance is a non-empty category
intersection between query and candidate project.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from workbench.embeddings import EmbeddingTable
from workbench.errors import ConfigError, DataError
from workbench.extraction import (
    ARTIFACT_KINDS,
    Document,
    GroundTruth,
    ProjectRecord,
    extract_project_facts,
    project_artifact_document,
)
from workbench.index import build_index
from workbench.metrics import EvalReport, evaluate_rankings
from workbench.models import (
    LatentSpace,
    ModelConfig,
    RankedList,
    lsi_fit,
    rank,
    scores_all,
)
from workbench.pipeline import PipelineConfig, default_config as default_pipeline

__all__ = [
    "ClanTuneResult",
    "FeatureRun",
    "build_feature_documents",
    "clan_score",
    "project_relevance",
    "run_clan_experiment",
    "run_feature_experiment",
    "tune_clan_weights",
]


def project_relevance(query: ProjectRecord, candidate: ProjectRecord) -> bool:
    """A retrieved project counts as relevant when it shares at least one
    category with the query project (projects carry multiple labels)."""
    return bool(query.categories & candidate.categories)


def build_feature_documents(
    projects: Sequence[ProjectRecord],
    kind: str,
    config: PipelineConfig | None = None,
    facts_cache: dict | None = None,
) -> list[Document]:
    """One document per project for the given artifact kind. Pass a
    shared facts_cache when building several code kinds so each project
    is scanned once."""
    config = config or default_pipeline()
    docs = []
    for p in projects:
        facts = None
        if kind in ("method_class", "import_package", "api"):
            if facts_cache is not None:
                facts = facts_cache.get(p.project_id)
                if facts is None:
                    facts = facts_cache[p.project_id] = extract_project_facts(p)
            else:
                facts = extract_project_facts(p)
        docs.append(project_artifact_document(p, kind, config, facts=facts))
    return docs


def _eligible_queries(
    projects: Sequence[ProjectRecord],
    empty_doc_ids: set[str],
) -> tuple[list[str], list[tuple[str, str]]]:
    """Project ids usable as queries, plus (project_id, reason) skips."""
    eligible = []
    skipped = []
    for p in projects:
        if not any(project_relevance(p, other) for other in projects if other.project_id != p.project_id):
            skipped.append((p.project_id, "no other project shares a category"))
        elif p.project_id in empty_doc_ids:
            skipped.append((p.project_id, "empty feature document"))
        else:
            eligible.append(p.project_id)
    return sorted(eligible), skipped


def _sample_queries(eligible: list[str], count: int | None, seed: int | None) -> list[str]:
    if count is None or count >= len(eligible):
        return eligible
    rng = np.random.default_rng(seed)
    chosen = rng.choice(np.array(eligible, dtype=object), size=count, replace=False)
    return sorted(str(c) for c in chosen)


@dataclass
class FeatureRun:
    feature: str
    model: ModelConfig
    report: EvalReport
    rankings: tuple[RankedList, ...]
    query_ids: tuple[str, ...]
    skipped: tuple[tuple[str, str], ...]
    lsi_dim_used: int | None = None  # set when the requested dim was clamped
    seed: int | None = None


def _clamped_lsi_dim(config: ModelConfig, n_docs: int, n_terms: int) -> int:
    return min(config.lsi_dim, n_docs, n_terms)


def run_feature_experiment(
    projects: Sequence[ProjectRecord],
    feature: str,
    config: ModelConfig,
    k: int = 10,
    query_count: int | None = 200,
    seed: int | None = None,
    embeddings: EmbeddingTable | None = None,
    pipeline_config: PipelineConfig | None = None,
    facts_cache: dict | None = None,
) -> FeatureRun:
    """Leave-one-out ranking over one artifact kind: each sampled query
    project ranks the other N-1 projects; metrics at cutoff k plus MRR."""
    if feature not in ARTIFACT_KINDS:
        raise ConfigError(f"unknown feature {feature!r}; expected one of {ARTIFACT_KINDS}")
    if len(projects) < 2:
        raise DataError("need at least two projects to recommend")
    pipeline_config = pipeline_config or default_pipeline()
    docs = build_feature_documents(projects, feature, pipeline_config, facts_cache)
    by_pid = {p.project_id: p for p in projects}
    doc_by_pid = {p.project_id: d for p, d in zip(projects, docs)}

    empty = {p for p, d in doc_by_pid.items() if not d.tokens}
    eligible, skipped = _eligible_queries(projects, empty)
    if not eligible:
        raise DataError("no eligible query projects (category overlap + non-empty documents)")
    query_ids = _sample_queries(eligible, query_count, seed)

    index = None
    space = None
    lsi_dim_used = None
    docs_tokens = None
    if config.model == "wmd":
        if embeddings is None:
            raise ConfigError("wmd experiments need an embedding table")
        docs_tokens = {d.doc_id: d.tokens for d in docs}
    else:
        index = build_index(docs, min_df=config.min_df, kind=feature)
        if config.model == "lsi":
            lsi_dim_used = _clamped_lsi_dim(config, index.n_docs, index.n_terms)
            space = lsi_fit(index, lsi_dim_used)

    truth = GroundTruth(relevant={})
    rankings = []
    for qid in query_ids:
        qdoc = doc_by_pid[qid]
        ranked = rank(
            qdoc, config, index=index, space=space,
            embeddings=embeddings, docs_tokens=docs_tokens,
        )
        truth.relevant[qdoc.doc_id] = frozenset(
            doc_by_pid[p.project_id].doc_id
            for p in projects
            if p.project_id != qid and project_relevance(by_pid[qid], p)
        )
        rankings.append(ranked)
    report = evaluate_rankings(rankings, truth, k)
    return FeatureRun(
        feature=feature,
        model=config,
        report=report,
        rankings=tuple(rankings),
        query_ids=tuple(query_ids),
        skipped=tuple(skipped),
        lsi_dim_used=lsi_dim_used,
        seed=seed,
    )


# ------------------------------------------------------- composite (2-feature)


def clan_score(pkg_sim: float, api_sim: float, w_pkg: float, w_api: float) -> float:
    """Weighted mix of the package-import and API-usage similarities."""
    return w_pkg * pkg_sim + w_api * api_sim


@dataclass
class _ClanState:
    """Everything query-independent for composite scoring."""

    project_ids: list[str]
    pos: dict[str, int]
    pkg_index: object
    api_index: object
    pkg_space: LatentSpace | None
    api_space: LatentSpace | None
    pkg_docs: dict[str, Document]
    api_docs: dict[str, Document]
    config: ModelConfig
    lsi_dims_used: tuple[int, int] | None
    truth_by_pid: dict[str, frozenset[str]]


def _model_sims(tokens, index, config: ModelConfig, space) -> np.ndarray:
    if config.model == "wmd":
        raise ConfigError("composite recommendation supports vsm/bm25/lsi, not 'wmd'")
    return scores_all(tokens, index, config, space)


def _prepare_clan(
    projects: Sequence[ProjectRecord],
    config: ModelConfig,
    pipeline_config: PipelineConfig,
    facts_cache: dict | None,
) -> _ClanState:
    if len(projects) < 2:
        raise DataError("need at least two projects to recommend")
    cache = facts_cache if facts_cache is not None else {}
    pkg_docs = build_feature_documents(projects, "import_package", pipeline_config, cache)
    api_docs = build_feature_documents(projects, "api", pipeline_config, cache)
    pkg_index = build_index(pkg_docs, min_df=config.min_df, kind="import_package")
    api_index = build_index(api_docs, min_df=config.min_df, kind="api")
    pkg_space = api_space = None
    dims = None
    if config.model == "lsi":
        d1 = _clamped_lsi_dim(config, pkg_index.n_docs, pkg_index.n_terms)
        d2 = _clamped_lsi_dim(config, api_index.n_docs, api_index.n_terms)
        pkg_space = lsi_fit(pkg_index, d1)
        api_space = lsi_fit(api_index, d2)
        dims = (d1, d2)
    by_pid = {p.project_id: p for p in projects}
    truth = {
        p.project_id: frozenset(
            o.project_id
            for o in projects
            if o.project_id != p.project_id and project_relevance(p, o)
        )
        for p in projects
    }
    return _ClanState(
        project_ids=[p.project_id for p in projects],
        pos={p.project_id: i for i, p in enumerate(projects)},
        pkg_index=pkg_index,
        api_index=api_index,
        pkg_space=pkg_space,
        api_space=api_space,
        pkg_docs={p.project_id: d for p, d in zip(projects, pkg_docs)},
        api_docs={p.project_id: d for p, d in zip(projects, api_docs)},
        config=config,
        lsi_dims_used=dims,
        truth_by_pid=truth,
    )


def _clan_query_sims(state: _ClanState, qid: str) -> tuple[np.ndarray, np.ndarray]:
    pkg = _model_sims(
        state.pkg_docs[qid].tokens, state.pkg_index, state.config, state.pkg_space
    )
    api = _model_sims(
        state.api_docs[qid].tokens, state.api_index, state.config, state.api_space
    )
    return pkg, api


def _clan_rank(state: _ClanState, qid: str, pkg: np.ndarray, api: np.ndarray, w_pkg: float, w_api: float) -> RankedList:
    entries = [
        (pid, clan_score(float(pkg[i]), float(api[i]), w_pkg, w_api))
        for i, pid in enumerate(state.project_ids)
        if pid != qid
    ]
    entries.sort(key=lambda e: (-e[1], e[0]))
    return RankedList(query_id=qid, entries=tuple(entries))


@dataclass
class ClanRun:
    config: ModelConfig
    w_pkg: float
    w_api: float
    report: EvalReport
    rankings: tuple[RankedList, ...]
    query_ids: tuple[str, ...]
    skipped: tuple[tuple[str, str], ...]
    lsi_dims_used: tuple[int, int] | None = None
    seed: int | None = None


def run_clan_experiment(
    projects: Sequence[ProjectRecord],
    config: ModelConfig,
    w_pkg: float,
    w_api: float,
    k: int = 10,
    query_count: int | None = 200,
    seed: int | None = None,
    pipeline_config: PipelineConfig | None = None,
    facts_cache: dict | None = None,
) -> ClanRun:
    if w_pkg < 0 or w_api < 0 or (w_pkg == 0 and w_api == 0):
        raise ConfigError(f"weights must be >= 0 and not both zero: ({w_pkg}, {w_api})")
    pipeline_config = pipeline_config or default_pipeline()
    state = _prepare_clan(projects, config, pipeline_config, facts_cache)
    both_empty = {
        pid for pid in state.project_ids
        if not state.pkg_docs[pid].tokens and not state.api_docs[pid].tokens
    }
    eligible, skipped = _eligible_queries(projects, both_empty)
    if not eligible:
        raise DataError("no eligible query projects")
    query_ids = _sample_queries(eligible, query_count, seed)
    truth = GroundTruth(relevant={qid: state.truth_by_pid[qid] for qid in query_ids})
    rankings = []
    for qid in query_ids:
        pkg, api = _clan_query_sims(state, qid)
        rankings.append(_clan_rank(state, qid, pkg, api, w_pkg, w_api))
    report = evaluate_rankings(rankings, truth, k)
    return ClanRun(
        config=config, w_pkg=w_pkg, w_api=w_api, report=report,
        rankings=tuple(rankings), query_ids=tuple(query_ids),
        skipped=tuple(skipped), lsi_dims_used=state.lsi_dims_used, seed=seed,
    )


@dataclass
class ClanTuneResult:
    w_pkg: float
    w_api: float
    report: EvalReport
    trace: tuple[dict, ...] = field(default_factory=tuple)  # one entry per grid point


def tune_clan_weights(
    projects: Sequence[ProjectRecord],
    config: ModelConfig,
    k: int = 10,
    grid_step: float = 0.1,
    query_count: int | None = 200,
    seed: int | None = None,
    pipeline_config: PipelineConfig | None = None,
    facts_cache: dict | None = None,
) -> ClanTuneResult:
    """Exhaustive search over (w, 1-w) on a regular grid, maximizing
    MAP@k; ties fall to MRR, then to the smaller package weight. The
    per-query component similarities are computed once and recombined
    per grid point."""
    if not 0 < grid_step <= 1:
        raise ConfigError(f"grid_step must be in (0, 1], got {grid_step}")
    pipeline_config = pipeline_config or default_pipeline()
    state = _prepare_clan(projects, config, pipeline_config, facts_cache)
    both_empty = {
        pid for pid in state.project_ids
        if not state.pkg_docs[pid].tokens and not state.api_docs[pid].tokens
    }
    eligible, _skipped = _eligible_queries(projects, both_empty)
    if not eligible:
        raise DataError("no eligible query projects")
    query_ids = _sample_queries(eligible, query_count, seed)
    truth = GroundTruth(relevant={qid: state.truth_by_pid[qid] for qid in query_ids})
    sims = {qid: _clan_query_sims(state, qid) for qid in query_ids}

    n_points = round(1.0 / grid_step)
    trace = []
    best = None  # (map, mrr, -w_pkg) maximized with strict >
    for i in range(n_points + 1):
        w_pkg = round(i * grid_step, 10)
        w_api = round(1.0 - w_pkg, 10)
        rankings = [
            _clan_rank(state, qid, sims[qid][0], sims[qid][1], w_pkg, w_api)
            for qid in query_ids
        ]
        report = evaluate_rankings(rankings, truth, k)
        trace.append(
            {"w_pkg": w_pkg, "w_api": w_api,
             "map_at_k": report.map_at_k, "mrr": report.mrr}
        )
        key = (report.map_at_k, report.mrr)
        if best is None or key > best[0]:
            best = (key, w_pkg, w_api, report)
    _, w_pkg, w_api, report = best
    return ClanTuneResult(w_pkg=w_pkg, w_api=w_api, report=report, trace=tuple(trace))
