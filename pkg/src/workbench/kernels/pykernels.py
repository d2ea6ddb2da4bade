"""Pure-numpy scoring kernels; the reference backend.

Each function scores one query against every document in a single call,
walking term-major postings. The compiled backend implements the same
signatures; both are interchangeable and tested for parity.
"""

from __future__ import annotations

import numpy as np

__all__ = ["bm25_scores", "cosine_scores", "wmd_distance_pair"]


def cosine_scores(q_term_ids, q_weights, t_indptr, t_doc_ids, t_tfidf, doc_norms, q_norm, n_docs):
    """Cosine between a sparse query vector and every document.

    q_term_ids/q_weights: the query's nonzero tf-idf entries.
    Documents (or queries) with zero norm score 0.
    """
    dots = np.zeros(n_docs)
    for tid, w in zip(q_term_ids, q_weights):
        lo, hi = t_indptr[tid], t_indptr[tid + 1]
        np.add.at(dots, t_doc_ids[lo:hi], w * t_tfidf[lo:hi])
    scores = np.zeros(n_docs)
    if q_norm > 0.0:
        nz = doc_norms > 0.0
        scores[nz] = dots[nz] / (q_norm * doc_norms[nz])
    return scores


def bm25_scores(q_term_ids, q_factors, t_indptr, t_doc_ids, t_tf, len_norm, k1, n_docs):
    """Accumulate per-term BM25 contributions over all documents.

    q_factors[i] already folds together the term's IDF and its
    query-side saturation, so each posting contributes
    q_factors[i] * tf(k1+1) / (tf + len_norm[doc]) where
    len_norm[doc] = k1(1 - b + b|D|/avg|D|).
    """
    scores = np.zeros(n_docs)
    for tid, factor in zip(q_term_ids, q_factors):
        lo, hi = t_indptr[tid], t_indptr[tid + 1]
        docs = t_doc_ids[lo:hi]
        tf = t_tf[lo:hi].astype(np.float64)
        np.add.at(scores, docs, factor * tf * (k1 + 1.0) / (tf + len_norm[docs]))
    return scores


def wmd_distance_pair(q_vecs, d_vecs):
    """Relaxed word-mover distance: for each query word vector, the
    Euclidean distance to its nearest document word vector, summed.

    Distances come from the direct squared-difference sum (not the
    ||q||² - 2q·d + ||d||² expansion) so a word present in both sides
    contributes exactly zero.
    """
    if len(q_vecs) == 0:
        return 0.0
    from scipy.spatial.distance import cdist

    return float(cdist(q_vecs, d_vecs).min(axis=1).sum())
