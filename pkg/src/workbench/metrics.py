"""Ranking-quality metrics and the evaluation report.

Average precision keeps the full relevant count R in the denominator
even under a rank cutoff, so a query with R > k can never reach 1.0 at
that cutoff — deliberately conservative. Reciprocal rank is computed
over the complete ranking with no cutoff; a query whose relevant
documents never appear contributes 0.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from workbench.extraction import GroundTruth
from workbench.models import RankedList

__all__ = [
    "EvalReport",
    "QueryEval",
    "avg_prec_at_k",
    "evaluate_rankings",
    "map_at_k",
    "mrr",
    "pct_gain",
    "precision_at_k",
    "recall_at_k",
    "write_report_csv",
    "write_report_json",
]


def _check(relevant: frozenset | set, k: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not relevant:
        raise ValueError("relevant set is empty; the query should have been excluded upstream")


def precision_at_k(ranked: RankedList, relevant: set, k: int) -> float:
    _check(relevant, k)
    top = ranked.doc_ids()[:k]
    return sum(1 for d in top if d in relevant) / k


def recall_at_k(ranked: RankedList, relevant: set, k: int) -> float:
    _check(relevant, k)
    top = ranked.doc_ids()[:k]
    return sum(1 for d in top if d in relevant) / len(relevant)


def avg_prec_at_k(ranked: RankedList, relevant: set, k: int) -> float:
    """(sum over the i-th retrieved relevant doc of i/rank_i) / R, where
    R counts all relevant docs and docs ranked beyond k contribute 0."""
    _check(relevant, k)
    hits = 0
    total = 0.0
    for rank_i, doc_id in enumerate(ranked.doc_ids()[:k], start=1):
        if doc_id in relevant:
            hits += 1
            total += hits / rank_i
    return total / len(relevant)


def reciprocal_rank(ranked: RankedList, relevant: set) -> float:
    """1/rank of the first relevant doc over the full list; 0 if absent."""
    if not relevant:
        raise ValueError("relevant set is empty; the query should have been excluded upstream")
    for rank_i, doc_id in enumerate(ranked.doc_ids(), start=1):
        if doc_id in relevant:
            return 1.0 / rank_i
    return 0.0


def map_at_k(avg_precs: Sequence[float]) -> float:
    if not avg_precs:
        raise ValueError("no queries to average")
    return sum(avg_precs) / len(avg_precs)


def mrr(reciprocal_ranks: Sequence[float]) -> float:
    if not reciprocal_ranks:
        raise ValueError("no queries to average")
    return sum(reciprocal_ranks) / len(reciprocal_ranks)


def pct_gain(a: float, b: float) -> float:
    """Percent improvement of b over baseline a: (b - a)/a * 100."""
    if a <= 0:
        raise ValueError(f"baseline must be positive, got {a}")
    return (b - a) / a * 100.0


@dataclass(frozen=True)
class QueryEval:
    query_id: str
    avg_prec: float
    reciprocal_rank: float
    precision: float
    recall: float


@dataclass(frozen=True)
class EvalReport:
    k: int
    per_query: tuple[QueryEval, ...]

    @property
    def query_count(self) -> int:
        return len(self.per_query)

    @property
    def map_at_k(self) -> float:
        return map_at_k([q.avg_prec for q in self.per_query])

    @property
    def mrr(self) -> float:
        return mrr([q.reciprocal_rank for q in self.per_query])

    @property
    def mean_precision(self) -> float:
        return sum(q.precision for q in self.per_query) / self.query_count

    @property
    def mean_recall(self) -> float:
        return sum(q.recall for q in self.per_query) / self.query_count

    def aggregates(self) -> dict[str, float]:
        return {
            "k": self.k,
            "query_count": self.query_count,
            "map_at_k": self.map_at_k,
            "mrr": self.mrr,
            "mean_precision_at_k": self.mean_precision,
            "mean_recall_at_k": self.mean_recall,
        }


def evaluate_rankings(
    rankings: Iterable[RankedList],
    truth: GroundTruth,
    k: int,
) -> EvalReport:
    """Score each ranking against its query's relevant set, in input
    order (the order fixes summation order, hence bit-reproducibility)."""
    rows = []
    for ranked in rankings:
        relevant = truth.relevant[ranked.query_id]
        rows.append(
            QueryEval(
                query_id=ranked.query_id,
                avg_prec=avg_prec_at_k(ranked, relevant, k),
                reciprocal_rank=reciprocal_rank(ranked, relevant),
                precision=precision_at_k(ranked, relevant, k),
                recall=recall_at_k(ranked, relevant, k),
            )
        )
    if not rows:
        raise ValueError("no rankings to evaluate")
    return EvalReport(k=k, per_query=tuple(rows))


def write_report_csv(report: EvalReport, path: str | Path, manifest_hash: str) -> None:
    """One row per query; every row carries the run-manifest hash so a
    result file is always traceable to the configuration that made it."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["query_id", "avg_prec_at_k", "reciprocal_rank",
             "precision_at_k", "recall_at_k", "k", "manifest_hash"]
        )
        for q in report.per_query:
            w.writerow(
                [q.query_id, repr(q.avg_prec), repr(q.reciprocal_rank),
                 repr(q.precision), repr(q.recall), report.k, manifest_hash]
            )


def write_report_json(report: EvalReport, path: str | Path, manifest_hash: str, extra: dict | None = None) -> None:
    payload = {"manifest_hash": manifest_hash, **report.aggregates()}
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
