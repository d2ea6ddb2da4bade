"""Immutable corpus statistics consumed by every similarity measure.

The index stores integer term/doc ids with compressed-sparse postings in
both document-major and term-major order: document-major rows feed LSI's
matrix construction and per-document vectors, term-major columns feed
the accumulation kernels that score one query term against all documents
at once.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from math import log
from pathlib import Path

import numpy as np

from workbench.errors import ConfigError, DataError
from workbench.extraction import Document

__all__ = [
    "CorpusIndex",
    "SparseVector",
    "build_index",
    "index_config_hash",
    "load_index",
    "tfidf_query_vector",
]

INDEX_FORMAT = "workbench-index-v1"


def index_config_hash(pipeline_hash: str, kind: str, min_df: int) -> str:
    """Hash of everything that must match between the build and use of
    an index: the preprocessing configuration, artifact kind, and the
    document-frequency floor."""
    import hashlib

    payload = json.dumps(
        {"pipeline": pipeline_hash, "kind": kind, "min_df": min_df},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()

# term_id -> weight, no explicit zeros stored.
SparseVector = dict[int, float]


@dataclass
class CorpusIndex:
    doc_ids: tuple[str, ...]
    terms: tuple[str, ...]  # lexicographically sorted; position = term_id
    df: np.ndarray  # int64 [V]
    indptr: np.ndarray  # int64 [N+1], document-major postings
    term_ids: np.ndarray  # int64 [nnz], sorted within each document row
    tf: np.ndarray  # int64 [nnz]
    doc_len: np.ndarray  # int64 [N], token count after min-DF filtering
    min_df: int
    kind: str = ""
    config_hash: str = ""
    _doc_pos: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._doc_pos:
            self._doc_pos = {d: i for i, d in enumerate(self.doc_ids)}

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def avg_doc_len(self) -> float:
        return float(self.doc_len.sum()) / self.n_docs

    @cached_property
    def vocab(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.terms)}

    def doc_position(self, doc_id: str) -> int:
        try:
            return self._doc_pos[doc_id]
        except KeyError:
            raise KeyError(f"unknown doc_id: {doc_id!r}") from None

    def postings(self, doc_id: str) -> dict[int, int]:
        i = self.doc_position(doc_id)
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return {
            int(t): int(c)
            for t, c in zip(self.term_ids[lo:hi], self.tf[lo:hi])
        }

    # ---- derived weight arrays (immutable after build, so cached) ----

    @cached_property
    def idf(self) -> np.ndarray:
        """ln(N / df) per term, for tf-idf weighting."""
        return np.log(self.n_docs / self.df.astype(np.float64))

    @cached_property
    def doc_tfidf(self) -> np.ndarray:
        """tf × idf aligned with the document-major postings arrays."""
        return self.tf.astype(np.float64) * self.idf[self.term_ids]

    @cached_property
    def doc_norms(self) -> np.ndarray:
        """Euclidean norm of each document's tf-idf vector."""
        sq = np.zeros(self.n_docs)
        np.add.at(sq, self._row_index, self.doc_tfidf**2)
        return np.sqrt(sq)

    @cached_property
    def _row_index(self) -> np.ndarray:
        counts = np.diff(self.indptr)
        return np.repeat(np.arange(self.n_docs), counts)

    @cached_property
    def term_major(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(t_indptr [V+1], t_doc_ids, t_tf, t_tfidf) — the postings of
        each term over documents, concatenated in term_id order."""
        order = np.argsort(self.term_ids, kind="stable")
        t_doc_ids = self._row_index[order]
        t_tf = self.tf[order]
        t_tfidf = self.doc_tfidf[order]
        counts = np.bincount(self.term_ids, minlength=self.n_terms)
        t_indptr = np.zeros(self.n_terms + 1, dtype=np.int64)
        np.cumsum(counts, out=t_indptr[1:])
        return t_indptr, t_doc_ids, t_tf, t_tfidf

    def tfidf_matrix(self):
        """Documents × terms CSR matrix of tf-idf weights (scipy)."""
        from scipy.sparse import csr_matrix

        return csr_matrix(
            (self.doc_tfidf, self.term_ids, self.indptr),
            shape=(self.n_docs, self.n_terms),
        )

    def doc_tfidf_vector(self, doc_id: str) -> SparseVector:
        i = self.doc_position(doc_id)
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return {
            int(t): float(w)
            for t, w in zip(self.term_ids[lo:hi], self.doc_tfidf[lo:hi])
            if w != 0.0
        }

    # ---- persistence ----

    def save(self, path: str | Path) -> None:
        meta = {
            "format": INDEX_FORMAT,
            "kind": self.kind,
            "min_df": self.min_df,
            "config_hash": self.config_hash,
            "n_docs": self.n_docs,
            "n_terms": self.n_terms,
        }
        np.savez_compressed(
            Path(path),
            meta=np.array(json.dumps(meta, sort_keys=True)),
            doc_ids=np.array(self.doc_ids, dtype=np.str_),
            terms=np.array(self.terms, dtype=np.str_),
            df=self.df,
            indptr=self.indptr,
            term_ids=self.term_ids,
            tf=self.tf,
            doc_len=self.doc_len,
        )


def load_index(path: str | Path, expected_config_hash: str | None = None) -> CorpusIndex:
    """Load a saved index; refuses one built under a different pipeline
    or indexing configuration when expected_config_hash is given."""
    path = Path(path)
    if not path.exists() and path.with_suffix(path.suffix + ".npz").exists():
        path = path.with_suffix(path.suffix + ".npz")  # savez appended it
    try:
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            arrays = {k: z[k] for k in ("df", "indptr", "term_ids", "tf", "doc_len")}
            doc_ids = tuple(str(d) for d in z["doc_ids"])
            terms = tuple(str(t) for t in z["terms"])
    except (OSError, KeyError, ValueError) as exc:
        raise DataError(f"unreadable index file {path}: {exc}") from exc
    if meta.get("format") != INDEX_FORMAT:
        raise DataError(
            f"index file {path} has format {meta.get('format')!r}, "
            f"expected {INDEX_FORMAT!r}"
        )
    if expected_config_hash is not None and meta["config_hash"] != expected_config_hash:
        raise ConfigError(
            f"index {path} was built under config hash {meta['config_hash']!r}; "
            f"current configuration hashes to {expected_config_hash!r} — rebuild the index"
        )
    return CorpusIndex(
        doc_ids=doc_ids,
        terms=terms,
        min_df=int(meta["min_df"]),
        kind=str(meta.get("kind", "")),
        config_hash=str(meta.get("config_hash", "")),
        **arrays,
    )


def build_index(
    docs: list[Document],
    min_df: int = 1,
    kind: str = "",
    config_hash: str = "",
) -> CorpusIndex:
    """Count, filter by document frequency, and freeze the corpus.

    Document lengths are computed after filtering, so every model sees
    the same effective documents. Terms get lexicographic ids, which
    makes rebuilds bit-identical.
    """
    if not docs:
        raise DataError("cannot build an index over zero documents")
    if min_df < 1:
        raise ConfigError(f"min_df must be >= 1, got {min_df}")
    seen: set[str] = set()
    for d in docs:
        if d.doc_id in seen:
            raise DataError(f"duplicate doc_id {d.doc_id!r}")
        seen.add(d.doc_id)

    df_counter: Counter[str] = Counter()
    for d in docs:
        df_counter.update(set(d.tokens))
    terms = tuple(sorted(t for t, c in df_counter.items() if c >= min_df))
    if not terms:
        raise DataError("empty vocabulary: every term fell below min_df")
    vocab = {t: i for i, t in enumerate(terms)}
    df = np.array([df_counter[t] for t in terms], dtype=np.int64)

    indptr = np.zeros(len(docs) + 1, dtype=np.int64)
    term_ids: list[int] = []
    tf: list[int] = []
    doc_len = np.zeros(len(docs), dtype=np.int64)
    for i, d in enumerate(docs):
        counts = Counter(t for t in d.tokens if t in vocab)
        row = sorted((vocab[t], c) for t, c in counts.items())
        term_ids.extend(t for t, _ in row)
        tf.extend(c for _, c in row)
        indptr[i + 1] = indptr[i] + len(row)
        doc_len[i] = sum(c for _, c in row)

    return CorpusIndex(
        doc_ids=tuple(d.doc_id for d in docs),
        terms=terms,
        df=df,
        indptr=indptr,
        term_ids=np.array(term_ids, dtype=np.int64),
        tf=np.array(tf, dtype=np.int64),
        doc_len=doc_len,
        min_df=min_df,
        kind=kind,
        config_hash=config_hash,
    )


def tfidf_query_vector(tokens, index: CorpusIndex) -> SparseVector:
    """tf × ln(N/df) over the index vocabulary; out-of-vocabulary terms
    contribute nothing, and terms present in every document (idf = 0)
    are dropped rather than stored as explicit zeros."""
    counts = Counter(t for t in tokens if t in index.vocab)
    out: SparseVector = {}
    for t, c in counts.items():
        tid = index.vocab[t]
        w = c * log(index.n_docs / index.df[tid])
        if w != 0.0:
            out[tid] = w
    return out
