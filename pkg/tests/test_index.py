"""Corpus index construction, weighting and persistence."""

import math

import numpy as np
import pytest

from synth import make_docs, random_corpus

from workbench.errors import ConfigError, DataError
from workbench.index import (
    build_index,
    index_config_hash,
    load_index,
    tfidf_query_vector,
)


def test_min_df_filtering_hand_trace():
    idx = build_index(make_docs([["a", "b"], ["b", "c"]]), min_df=2)
    assert idx.terms == ("b",)
    assert idx.df.tolist() == [2]
    assert idx.doc_len.tolist() == [1, 1]  # post-filter lengths
    assert idx.avg_doc_len == 1.0


def test_min_df_one_keeps_all():
    idx = build_index(make_docs([["a", "b"], ["b", "c"]]), min_df=1)
    assert idx.terms == ("a", "b", "c")
    assert idx.n_docs == 2


def test_min_df_unreachable_is_empty_vocabulary():
    with pytest.raises(DataError, match="empty vocabulary"):
        build_index(make_docs([["a", "b"], ["b", "c"]]), min_df=3)


def test_invalid_min_df():
    with pytest.raises(ConfigError):
        build_index(make_docs([["a"]]), min_df=0)


def test_duplicate_doc_id():
    docs = make_docs([["a"], ["b"]])
    docs[1] = type(docs[1])(doc_id=docs[0].doc_id, kind="description",
                            tokens=("b",), missing=False)
    with pytest.raises(DataError):
        build_index(docs, min_df=1)


def test_empty_doc_list():
    with pytest.raises(DataError):
        build_index([], min_df=1)


def test_idf_formula():
    # N=4; df(a)=1 -> ln 4; df(b)=4 -> ln 1 = 0
    idx = build_index(make_docs([["a", "b"], ["b"], ["b"], ["b"]]), min_df=1)
    a, b = idx.vocab["a"], idx.vocab["b"]
    assert idx.idf[a] == pytest.approx(math.log(4.0), abs=1e-15)
    assert idx.idf[b] == 0.0


def test_tfidf_weight_formula():
    # tf=2, df=1, N=4 -> 2 ln 4 = 2.7726
    idx = build_index(
        make_docs([["a", "a", "b"], ["b"], ["b"], ["b"]]), min_df=1
    )
    vec = idx.doc_tfidf_vector(idx.doc_ids[0])
    assert vec[idx.vocab["a"]] == pytest.approx(2 * math.log(4.0), abs=1e-12)
    # the everywhere-term carries weight 0 (idf = ln 1)
    assert vec.get(idx.vocab["b"], 0.0) == 0.0


def test_query_vector():
    idx = build_index(make_docs([["a", "b"], ["b"], ["b"], ["b"]]), min_df=1)
    q = tfidf_query_vector(["a", "a", "zzz"], idx)
    assert q == {idx.vocab["a"]: pytest.approx(2 * math.log(4.0))}
    assert tfidf_query_vector(["zzz"], idx) == {}  # all-OOV -> zero vector
    assert tfidf_query_vector([], idx) == {}
    # zero-idf terms are dropped from query vectors too
    assert tfidf_query_vector(["b"], idx) == {}


def test_doc_len_tracks_filtering():
    # 'c' (df=1) is filtered at min_df=2; doc lengths shrink accordingly
    idx = build_index(make_docs([["a", "b", "c"], ["a", "b"]]), min_df=2)
    assert idx.doc_len.tolist() == [2, 2]
    assert sum(idx.tf[idx.indptr[0]:idx.indptr[1]]) == idx.doc_len[0]


def test_vocabulary_sorted_and_ids_dense():
    idx = build_index(make_docs([["zebra", "apple", "mango"]]), min_df=1)
    assert idx.terms == ("apple", "mango", "zebra")
    assert [idx.vocab[t] for t in idx.terms] == [0, 1, 2]


def test_term_major_view_consistent():
    rng = np.random.default_rng(7)
    lists, _ = random_corpus(rng, max_docs=20, max_vocab=30)
    idx = build_index(make_docs(lists), min_df=1)
    t_indptr, t_doc_ids, t_tf, t_tfidf = idx.term_major
    for tid in range(idx.n_terms):
        rows = slice(t_indptr[tid], t_indptr[tid + 1])
        assert len(t_doc_ids[rows]) == idx.df[tid]
        for d, tf in zip(t_doc_ids[rows], t_tf[rows]):
            sparse = idx.doc_tfidf_vector(idx.doc_ids[d])
            assert sparse.get(tid, 0.0) == pytest.approx(tf * idx.idf[tid])


def test_tfidf_matrix_matches_dicts():
    rng = np.random.default_rng(3)
    lists, _ = random_corpus(rng, max_docs=15, max_vocab=25)
    idx = build_index(make_docs(lists), min_df=1)
    dense = idx.tfidf_matrix().toarray()
    for i in range(idx.n_docs):
        expect = np.zeros(idx.n_terms)
        for tid, w in idx.doc_tfidf_vector(idx.doc_ids[i]).items():
            expect[tid] = w
        np.testing.assert_allclose(dense[i], expect, rtol=0, atol=0)


def test_rebuild_determinism():
    rng = np.random.default_rng(11)
    lists, _ = random_corpus(rng, max_docs=25, max_vocab=40)
    a = build_index(make_docs(lists), min_df=2)
    b = build_index(make_docs(lists), min_df=2)
    assert a.terms == b.terms
    assert a.df.tolist() == b.df.tolist()
    assert a.tf.tolist() == b.tf.tolist()
    assert a.doc_ids == b.doc_ids


def test_save_load_roundtrip(tmp_path):
    docs = make_docs([["a", "b"], ["b", "c"], ["a", "c", "c"]])
    h = index_config_hash("pipehash", "description", 1)
    idx = build_index(docs, min_df=1, kind="description", config_hash=h)
    path = tmp_path / "idx.npz"
    idx.save(path)
    loaded = load_index(path, expected_config_hash=h)
    assert loaded.terms == idx.terms
    assert loaded.doc_ids == idx.doc_ids
    assert loaded.df.tolist() == idx.df.tolist()
    assert loaded.tf.tolist() == idx.tf.tolist()
    assert loaded.min_df == 1 and loaded.kind == "description"
    np.testing.assert_array_equal(loaded.idf, idx.idf)


def test_load_rejects_config_mismatch(tmp_path):
    h = index_config_hash("pipehash", "description", 1)
    idx = build_index(make_docs([["a"], ["a", "b"]]), min_df=1, config_hash=h)
    path = tmp_path / "idx.npz"
    idx.save(path)
    with pytest.raises(ConfigError):
        load_index(path, expected_config_hash=index_config_hash("pipehash", "description", 2))


def test_config_hash_sensitive_to_all_parts():
    base = index_config_hash("p", "description", 1)
    assert index_config_hash("q", "description", 1) != base
    assert index_config_hash("p", "readme", 1) != base
    assert index_config_hash("p", "description", 2) != base
    assert index_config_hash("p", "description", 1) == base
