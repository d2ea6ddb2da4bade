"""Time the compiled scoring kernels against the numpy fallback.

Builds a synthetic term-major postings workload, checks that both
backends agree, then reports median wall time per call and the speedup.

    python3 benchmarks/bench_kernels.py [--docs N] [--terms V] [--repeats R]
"""

import argparse
import statistics
import time

import numpy as np
import scipy.sparse as sp

from workbench.kernels import pykernels

try:
    from workbench.kernels import _ckernels
except ImportError:
    _ckernels = None


def make_workload(rng, n_docs, n_terms, density, dim):
    """Random postings in the same layout the index hands to the kernels."""
    mat = sp.random(n_terms, n_docs, density=density, random_state=rng, format="csr")
    mat.data = rng.integers(1, 8, size=mat.nnz).astype(np.float64)
    t_indptr = mat.indptr.astype(np.int64)
    t_doc_ids = mat.indices.astype(np.int64)
    tf = mat.data.astype(np.int64)

    df = np.diff(t_indptr).astype(np.float64)
    idf = np.log(n_docs / np.maximum(df, 1.0))
    tfidf = np.repeat(idf, np.diff(t_indptr)) * mat.data
    sq = np.zeros(n_docs)
    np.add.at(sq, t_doc_ids, tfidf**2)
    doc_norms = np.sqrt(sq)

    doc_len = np.zeros(n_docs)
    np.add.at(doc_len, t_doc_ids, mat.data)
    k1, b = 1.5, 0.75
    len_norm = k1 * (1.0 - b + b * doc_len / doc_len.mean())

    q_term_ids = np.sort(rng.choice(n_terms, size=30, replace=False)).astype(np.int64)
    q_weights = rng.uniform(0.5, 3.0, size=30)
    q_norm = float(np.linalg.norm(q_weights))
    q_factors = rng.uniform(0.1, 4.0, size=30)

    q_vecs = np.ascontiguousarray(rng.standard_normal((40, dim)))
    d_vecs = np.ascontiguousarray(rng.standard_normal((220, dim)))
    # typical retrieval case: a third of the query tokens also occur in
    # the document, i.e. their vectors coincide with a document row
    q_shared = q_vecs.copy()
    q_shared[:13] = d_vecs[rng.choice(len(d_vecs), size=13, replace=False)]

    return {
        "cosine_scores": (q_term_ids, q_weights, t_indptr, t_doc_ids, tfidf,
                          doc_norms, q_norm, n_docs),
        "bm25_scores": (q_term_ids, q_factors, t_indptr, t_doc_ids, tf,
                        len_norm, k1, n_docs),
        "wmd (disjoint)": (q_vecs, d_vecs),
        "wmd (shared vocab)": (q_shared, d_vecs),
    }


def median_time(fn, args, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--docs", type=int, default=4000)
    ap.add_argument("--terms", type=int, default=8000)
    ap.add_argument("--density", type=float, default=0.01)
    ap.add_argument("--dim", type=int, default=300)
    ap.add_argument("--repeats", type=int, default=30)
    opts = ap.parse_args()

    if _ckernels is None:
        raise SystemExit("compiled extension not built; run pip install -e . first")

    rng = np.random.default_rng(0)
    work = make_workload(rng, opts.docs, opts.terms, opts.density, opts.dim)

    print(f"{opts.docs} docs x {opts.terms} terms, density {opts.density}, "
          f"embeddings dim {opts.dim}, median of {opts.repeats} runs\n")
    print(f"{'kernel':<20}{'python':>12}{'compiled':>12}{'speedup':>10}")
    for name, args in work.items():
        fn_name = name.split(" ")[0] if name.startswith("wmd") else name
        fn_name = "wmd_distance_pair" if fn_name == "wmd" else fn_name
        ref = getattr(pykernels, fn_name)(*args)
        fast = getattr(_ckernels, fn_name)(*args)
        if not np.allclose(ref, fast, rtol=1e-12, atol=1e-12):
            raise SystemExit(f"{name}: backends disagree, refusing to time")
        t_py = median_time(getattr(pykernels, fn_name), args, opts.repeats)
        t_c = median_time(getattr(_ckernels, fn_name), args, opts.repeats)
        print(f"{name:<20}{t_py * 1e3:>10.2f}ms{t_c * 1e3:>10.2f}ms{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
