"""The four similarity measures and a uniform ranking interface.

All models rank the same candidate set and obey the same determinism
contract: scores non-increasing, ties broken by ascending doc_id, the
query document excluded when it is a corpus member. VSM and BM25 run
through the swappable scoring kernels; LSI is dense linear algebra;
the word-embedding distance ranks by negated distance so the
"descending score" convention holds everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Collection, Mapping, Sequence

import numpy as np

from workbench import kernels
from workbench.embeddings import EmbeddingTable
from workbench.errors import ConfigError, DataError
from workbench.extraction import Document
from workbench.index import CorpusIndex, SparseVector, tfidf_query_vector

__all__ = [
    "LOCALIZE_DEFAULTS",
    "MODEL_NAMES",
    "LatentSpace",
    "ModelConfig",
    "RECOMMEND_DEFAULTS",
    "RankedList",
    "WmdResult",
    "bm25_score",
    "bm25_scores_all",
    "default_config",
    "lsi_fit",
    "lsi_project",
    "rank",
    "vsm_score",
    "vsm_scores_all",
    "wmd_distance",
]

MODEL_NAMES = ("vsm", "bm25", "lsi", "wmd")

# Above this matrix size the truncated SVD switches to sparse iteration.
_DENSE_SVD_LIMIT = 1500


@dataclass(frozen=True)
class ModelConfig:
    model: str
    k1: float = 1.5
    k2: float = 1.5
    b: float = 0.75
    lsi_dim: int = 100
    min_df: int = 1
    embedding_dim: int = 300  # informational: provenance of the embedding file
    embedding_path: str | None = None
    window: int = 5  # informational

    def __post_init__(self):
        if self.model not in MODEL_NAMES:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {MODEL_NAMES}")
        if not 0.0 <= self.b <= 1.0:
            raise ConfigError(f"b must lie in [0, 1], got {self.b}")
        if self.k1 < 0 or self.k2 < 0:
            raise ConfigError(f"k1 and k2 must be >= 0, got k1={self.k1}, k2={self.k2}")
        if self.lsi_dim < 1:
            raise ConfigError(f"lsi_dim must be positive, got {self.lsi_dim}")
        if self.min_df < 1:
            raise ConfigError(f"min_df must be >= 1, got {self.min_df}")


# Best-performing configurations per task, applied as CLI defaults.
RECOMMEND_DEFAULTS: dict[str, ModelConfig] = {
    "vsm": ModelConfig("vsm", min_df=2),
    "bm25": ModelConfig("bm25", k1=1.5, k2=1.5, b=0.75, min_df=2),
    "lsi": ModelConfig("lsi", lsi_dim=100, min_df=2),
    "wmd": ModelConfig("wmd", embedding_dim=300, window=5),
}
LOCALIZE_DEFAULTS: dict[str, ModelConfig] = {
    "vsm": ModelConfig("vsm", min_df=1),
    "bm25": ModelConfig("bm25", k1=1.5, k2=1.5, b=0.75, min_df=2),
    "lsi": ModelConfig("lsi", lsi_dim=100, min_df=15),
    "wmd": ModelConfig("wmd", embedding_dim=100, window=10),
}


def default_config(model: str, task: str = "recommend") -> ModelConfig:
    if task == "recommend":
        table = RECOMMEND_DEFAULTS
    elif task == "localize":
        table = LOCALIZE_DEFAULTS
    else:
        raise ConfigError(f"unknown task {task!r}; expected 'recommend' or 'localize'")
    try:
        return table[model]
    except KeyError:
        raise ConfigError(f"unknown model {model!r}") from None


# ---------------------------------------------------------------- VSM


def vsm_score(q: SparseVector, d: SparseVector) -> float:
    """Cosine of two sparse tf-idf vectors; 0 when either norm is 0."""
    if not q or not d:
        return 0.0
    dot = sum(w * d.get(t, 0.0) for t, w in q.items())
    nq = math.sqrt(sum(w * w for w in q.values()))
    nd = math.sqrt(sum(w * w for w in d.values()))
    if nq == 0.0 or nd == 0.0:
        return 0.0
    return dot / (nq * nd)


def vsm_scores_all(query_tokens: Sequence[str], index: CorpusIndex) -> np.ndarray:
    q = tfidf_query_vector(query_tokens, index)
    q_ids = np.fromiter(q.keys(), dtype=np.int64, count=len(q))
    q_w = np.fromiter(q.values(), dtype=np.float64, count=len(q))
    q_norm = float(np.sqrt(np.sum(q_w**2)))
    t_indptr, t_doc_ids, _, t_tfidf = index.term_major
    return kernels.cosine_scores(
        q_ids, q_w, t_indptr, t_doc_ids, t_tfidf, index.doc_norms, q_norm, index.n_docs
    )


# --------------------------------------------------------------- BM25


def _bm25_idf(n_docs: int, df: int) -> float:
    return math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))


def _qtf_factor(qtf: int, k2: float) -> float:
    return qtf * (k2 + 1.0) / (k2 + qtf)


def bm25_score(query_tokens: Sequence[str], doc_id: str, index: CorpusIndex, config: ModelConfig) -> float:
    """Direct single-pair evaluation of the scoring formula:

        sum over distinct query terms of
        IDF(t) * tf(k1+1)/(tf + k1(1-b+b|D|/avg|D|)) * qtf(k2+1)/(k2+qtf)

    with IDF(t) = ln(1 + (N-df+0.5)/(df+0.5)). The query-side qtf
    factor is kept because queries here (reports, whole projects) are
    long enough to repeat terms.
    """
    postings = index.postings(doc_id)
    dl = float(index.doc_len[index.doc_position(doc_id)])
    len_norm = config.k1 * (1.0 - config.b + config.b * dl / index.avg_doc_len)
    qtf: dict[int, int] = {}
    for t in query_tokens:
        tid = index.vocab.get(t)
        if tid is not None:
            qtf[tid] = qtf.get(tid, 0) + 1
    score = 0.0
    for tid, qc in qtf.items():
        tf = postings.get(tid, 0)
        if tf == 0:
            continue
        idf = _bm25_idf(index.n_docs, int(index.df[tid]))
        score += idf * (tf * (config.k1 + 1.0) / (tf + len_norm)) * _qtf_factor(qc, config.k2)
    return score


def bm25_scores_all(query_tokens: Sequence[str], index: CorpusIndex, config: ModelConfig) -> np.ndarray:
    qtf: dict[int, int] = {}
    for t in query_tokens:
        tid = index.vocab.get(t)
        if tid is not None:
            qtf[tid] = qtf.get(tid, 0) + 1
    if not qtf:
        return np.zeros(index.n_docs)
    q_ids = np.fromiter(qtf.keys(), dtype=np.int64, count=len(qtf))
    factors = np.array(
        [
            _bm25_idf(index.n_docs, int(index.df[tid])) * _qtf_factor(c, config.k2)
            for tid, c in qtf.items()
        ]
    )
    len_norm = config.k1 * (
        1.0 - config.b + config.b * index.doc_len.astype(np.float64) / index.avg_doc_len
    )
    t_indptr, t_doc_ids, t_tf, _ = index.term_major
    return kernels.bm25_scores(
        q_ids, factors, t_indptr, t_doc_ids, t_tf, len_norm, config.k1, index.n_docs
    )


# ---------------------------------------------------------------- LSI


@dataclass
class LatentSpace:
    term_basis: np.ndarray  # [V, k], orthonormal columns
    singular_values: np.ndarray  # [k], non-increasing
    doc_vectors: np.ndarray  # [N, k]; row j = term_basis^T @ (doc j tf-idf)
    doc_ids: tuple[str, ...]

    @property
    def k(self) -> int:
        return self.term_basis.shape[1]


def _sign_fix(u: np.ndarray, w: np.ndarray) -> None:
    """Make the SVD deterministic: the largest-magnitude entry of each
    term-basis column is forced positive (in place)."""
    for i in range(u.shape[1]):
        j = int(np.argmax(np.abs(u[:, i])))
        if u[j, i] < 0:
            u[:, i] = -u[:, i]
            w[:, i] = -w[:, i]


def lsi_fit(index: CorpusIndex, k: int) -> LatentSpace:
    """Rank-k truncated SVD of the tf-idf term-document matrix.

    doc_vectors[j] equals the projection of document j's tf-idf column
    onto the k leading left singular vectors, i.e. sigma_k * v_jk; at
    full rank pairwise document cosines therefore equal VSM cosines.
    """
    max_rank = min(index.n_docs, index.n_terms)
    if k > max_rank:
        raise ConfigError(
            f"lsi_dim {k} exceeds min(n_docs, n_terms) = {max_rank}"
        )
    X = index.tfidf_matrix()  # docs x terms
    if X.nnz == 0 or not np.any(X.data):
        raise DataError("degenerate tf-idf matrix: all weights are zero")
    if max_rank <= _DENSE_SVD_LIMIT or k >= max_rank - 1:
        # A = X.T (terms x docs) = U S Wt; doc coords = S * W rows
        u, s, wt = np.linalg.svd(X.toarray().T, full_matrices=False)
        u, s, w = u[:, :k], s[:k], wt[:k].T
    else:
        from scipy.sparse.linalg import svds

        u, s, wt = svds(X.T.tocsc(), k=k)
        order = np.argsort(s)[::-1]  # svds returns ascending
        u, s, w = u[:, order], s[order], wt[order].T
    _sign_fix(u, w)
    return LatentSpace(
        term_basis=np.ascontiguousarray(u),
        singular_values=s,
        doc_vectors=np.ascontiguousarray(w * s),
        doc_ids=index.doc_ids,
    )


def lsi_project(q: SparseVector, space: LatentSpace) -> np.ndarray:
    """Fold a sparse tf-idf query vector into the latent space.

    The projection is term_basis^T @ q — the same map that produced
    doc_vectors — so projecting an indexed document's own tf-idf vector
    reproduces its stored coordinates, and cosine against doc_vectors
    at full rank reproduces VSM. (Scaling by 1/sigma would break that
    self-consistency; since cosine is scale-free per axis only under
    equal treatment of query and documents, both sides stay unscaled.)
    """
    out = np.zeros(space.k)
    for tid, w in q.items():
        out += w * space.term_basis[tid]
    return out


def lsi_scores_all(query_tokens: Sequence[str], index: CorpusIndex, space: LatentSpace) -> np.ndarray:
    if space.doc_ids != index.doc_ids:
        raise ConfigError("latent space was fitted on a different document set than the index")
    q = lsi_project(tfidf_query_vector(query_tokens, index), space)
    q_norm = float(np.linalg.norm(q))
    doc_norms = np.linalg.norm(space.doc_vectors, axis=1)
    scores = np.zeros(len(space.doc_ids))
    if q_norm > 0.0:
        nz = doc_norms > 0.0
        scores[nz] = (space.doc_vectors[nz] @ q) / (q_norm * doc_norms[nz])
    return scores


# ---------------------------------------------------------------- WMD


@dataclass(frozen=True)
class WmdResult:
    distance: float
    skipped_query_tokens: int
    skipped_doc_tokens: int


def wmd_distance(
    query_tokens: Sequence[str],
    doc_tokens: Sequence[str],
    embeddings: EmbeddingTable,
) -> WmdResult:
    """Sum over query tokens (with multiplicity) of the Euclidean
    distance to the nearest embeddable document token.

    Query tokens without embeddings are skipped and counted; a document
    with no embeddable token gets distance +inf so it ranks last.
    """
    if len(embeddings) == 0:
        raise DataError("embedding table is empty")
    q_vecs, q_skipped = embeddings.vectors_for(query_tokens)
    # distinct doc tokens suffice for a min; insertion order kept
    d_vecs, d_skipped = embeddings.vectors_for(dict.fromkeys(doc_tokens))
    if len(q_vecs) == 0:
        return WmdResult(0.0, len(q_skipped), len(d_skipped))
    if len(d_vecs) == 0:
        return WmdResult(math.inf, len(q_skipped), len(d_skipped))
    dist = kernels.wmd_distance_pair(np.ascontiguousarray(q_vecs), np.ascontiguousarray(d_vecs))
    return WmdResult(float(dist), len(q_skipped), len(d_skipped))


def scores_all(
    query_tokens: Sequence[str],
    index: CorpusIndex,
    config: ModelConfig,
    space: "LatentSpace | None" = None,
) -> np.ndarray:
    """Scores for one query against every indexed document, aligned
    with index.doc_ids. Dispatches on the index-backed models."""
    if config.model == "vsm":
        return vsm_scores_all(query_tokens, index)
    if config.model == "bm25":
        return bm25_scores_all(query_tokens, index, config)
    if config.model == "lsi":
        if space is None:
            raise ConfigError("lsi scoring needs a fitted latent space")
        return lsi_scores_all(query_tokens, index, space)
    raise ConfigError(f"scores_all supports vsm/bm25/lsi, not {config.model!r}")


# ------------------------------------------------------------- ranking


@dataclass(frozen=True)
class RankedList:
    query_id: str
    entries: tuple[tuple[str, float], ...]  # scores non-increasing; ties by doc_id

    def doc_ids(self) -> tuple[str, ...]:
        return tuple(d for d, _ in self.entries)

    def rank_of(self, doc_id: str) -> int:
        """1-based rank; raises if absent."""
        for i, (d, _) in enumerate(self.entries, start=1):
            if d == doc_id:
                return i
        raise KeyError(f"doc {doc_id!r} not in ranking")


def _ordered(query_id: str, ids: Sequence[str], scores: Sequence[float]) -> RankedList:
    entries = sorted(zip(ids, scores), key=lambda e: (-e[1], e[0]))
    return RankedList(query_id=query_id, entries=tuple((d, float(s)) for d, s in entries))


def rank(
    query: Document,
    config: ModelConfig,
    index: CorpusIndex | None = None,
    space: LatentSpace | None = None,
    embeddings: EmbeddingTable | None = None,
    docs_tokens: Mapping[str, Sequence[str]] | None = None,
    exclude: Collection[str] = (),
) -> RankedList:
    """Rank every candidate document for one query under one model.

    The query document itself (matched by doc_id) and any ids in
    ``exclude`` are dropped from the candidates. The embedding-distance
    model needs ``embeddings`` plus ``docs_tokens`` (raw per-candidate
    token sequences); the others need ``index`` (LSI also ``space``).
    """
    if config.model == "wmd":
        if embeddings is None or docs_tokens is None:
            raise ConfigError("wmd ranking needs embeddings and docs_tokens")
        candidate_ids = [d for d in docs_tokens if d != query.doc_id and d not in exclude]
        if not candidate_ids:
            raise DataError("empty candidate set")
        scores = [
            -wmd_distance(query.tokens, docs_tokens[d], embeddings).distance
            for d in candidate_ids
        ]
        return _ordered(query.doc_id, candidate_ids, scores)

    if index is None:
        raise ConfigError(f"{config.model} ranking needs a corpus index")
    if config.model == "vsm":
        all_scores = vsm_scores_all(query.tokens, index)
    elif config.model == "bm25":
        all_scores = bm25_scores_all(query.tokens, index, config)
    elif config.model == "lsi":
        if space is None:
            raise ConfigError("lsi ranking needs a fitted latent space")
        all_scores = lsi_scores_all(query.tokens, index, space)
    else:  # pragma: no cover - ModelConfig already validates
        raise ConfigError(f"unknown model {config.model!r}")
    keep = [
        (d, all_scores[i])
        for i, d in enumerate(index.doc_ids)
        if d != query.doc_id and d not in exclude
    ]
    if not keep:
        raise DataError("empty candidate set")
    return _ordered(query.doc_id, [d for d, _ in keep], [s for _, s in keep])


def with_overrides(config: ModelConfig, **kwargs) -> ModelConfig:
    """ModelConfig copy with field overrides (validation re-applied)."""
    return replace(config, **kwargs)
