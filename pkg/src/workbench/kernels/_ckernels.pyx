# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled scoring kernels, signature-compatible with pykernels.

Operation order inside each accumulation mirrors the numpy backend so
the two agree to floating-point round-off.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def cosine_scores(
    cnp.int64_t[::1] q_term_ids,
    double[::1] q_weights,
    cnp.int64_t[::1] t_indptr,
    cnp.int64_t[::1] t_doc_ids,
    double[::1] t_tfidf,
    double[::1] doc_norms,
    double q_norm,
    Py_ssize_t n_docs,
):
    out = np.zeros(n_docs)
    cdef double[::1] dots = out
    cdef Py_ssize_t i, p, lo, hi
    cdef cnp.int64_t tid
    cdef double w
    for i in range(q_term_ids.shape[0]):
        tid = q_term_ids[i]
        w = q_weights[i]
        lo = t_indptr[tid]
        hi = t_indptr[tid + 1]
        for p in range(lo, hi):
            dots[t_doc_ids[p]] += w * t_tfidf[p]
    scores = np.zeros(n_docs)
    cdef double[::1] sview = scores
    cdef Py_ssize_t d
    if q_norm > 0.0:
        for d in range(n_docs):
            if doc_norms[d] > 0.0:
                sview[d] = dots[d] / (q_norm * doc_norms[d])
    return scores


def bm25_scores(
    cnp.int64_t[::1] q_term_ids,
    double[::1] q_factors,
    cnp.int64_t[::1] t_indptr,
    cnp.int64_t[::1] t_doc_ids,
    cnp.int64_t[::1] t_tf,
    double[::1] len_norm,
    double k1,
    Py_ssize_t n_docs,
):
    scores = np.zeros(n_docs)
    cdef double[::1] sview = scores
    cdef Py_ssize_t i, p, lo, hi
    cdef cnp.int64_t tid, doc
    cdef double factor, tf
    for i in range(q_term_ids.shape[0]):
        tid = q_term_ids[i]
        factor = q_factors[i]
        lo = t_indptr[tid]
        hi = t_indptr[tid + 1]
        for p in range(lo, hi):
            doc = t_doc_ids[p]
            tf = <double> t_tf[p]
            sview[doc] += factor * tf * (k1 + 1.0) / (tf + len_norm[doc])
    return scores


def wmd_distance_pair(double[:, ::1] q_vecs, double[:, ::1] d_vecs):
    cdef Py_ssize_t nq = q_vecs.shape[0]
    cdef Py_ssize_t nd = d_vecs.shape[0]
    cdef Py_ssize_t dim = q_vecs.shape[1]
    if nq == 0:
        return 0.0
    cdef double total = 0.0
    cdef double best, sq, diff
    cdef double *qrow
    cdef double *drow
    cdef Py_ssize_t i, j, k, kend
    for i in range(nq):
        best = -1.0
        qrow = &q_vecs[i, 0]
        for j in range(nd):
            drow = &d_vecs[j, 0]
            sq = 0.0
            k = 0
            # accumulate in branch-free blocks; between blocks, abandon
            # the candidate once its partial sum already exceeds the
            # best squared distance seen so far (a coincident pair
            # still sums to exactly 0)
            while k < dim:
                kend = k + 32
                if kend > dim:
                    kend = dim
                while k < kend:
                    diff = qrow[k] - drow[k]
                    sq += diff * diff
                    k += 1
                if best >= 0.0 and sq >= best:
                    break
            if best < 0.0 or sq < best:
                best = sq
            if best == 0.0:
                break
        total += sqrt(best)
    return float(total)
