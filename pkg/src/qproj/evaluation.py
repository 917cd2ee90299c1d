"""Graded ranking evaluation with NDCG@k.

DCG uses the classic form sum_i rel_i / log2(i + 1) over 1-indexed ranks;
NDCG divides by the DCG of the grade-sorted ideal ranking. Score ties are
broken by ascending passage id so evaluation is deterministic, unjudged
passages count as grade 0, and queries whose judgments are all zero are
excluded from the mean (reported, not silently dropped).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionError, DomainError

# judgments: query_id -> {passage_id -> integer grade}
RelevanceJudgments = Mapping[str, Mapping[str, int]]

DEFAULT_K = 10


def dcg_at_k(grades: Sequence[float], k: int) -> float:
    """Discounted cumulative gain of grades already in rank order."""
    if k < 1:
        raise DimensionError("k must be at least 1")
    return float(sum(g / math.log2(i + 1) for i, g in enumerate(grades[:k], start=1)))


def ndcg_at_k(ranked_ids: Sequence[str], grades: Mapping[str, int], k: int = DEFAULT_K) -> float:
    """NDCG@k of a ranking against graded judgments (unjudged ids count 0)."""
    ideal = sorted(grades.values(), reverse=True)
    idcg = dcg_at_k(ideal, k)
    if idcg == 0.0:
        raise DomainError("all judgments are zero; NDCG undefined")
    got = dcg_at_k([grades.get(pid, 0) for pid in ranked_ids], k)
    return got / idcg


@dataclass
class EvalResult:
    """Mean and per-query NDCG, skipped queries, and the ranked run rows."""

    mean_ndcg: float
    per_query: dict[str, float]
    skipped: list[tuple[str, str]]
    k: int
    run_rows: list[tuple[str, int, str, float]] = field(default_factory=list, repr=False)


def evaluate(model, store, judgments: RelevanceJudgments, k: int = DEFAULT_K) -> EvalResult:
    """Rank each judged pool with the model and average NDCG@k.

    Pools are the judged passages per query. A query with an unknown
    embedding, an all-zero grade set, or no resolvable passages is skipped
    with a reason. Ties in score rank by ascending passage id.
    """
    per_query: dict[str, float] = {}
    skipped: list[tuple[str, str]] = []
    rows: list[tuple[str, int, str, float]] = []
    for qid in sorted(judgments):
        grades = judgments[qid]
        if qid not in store:
            skipped.append((qid, "query embedding missing"))
            continue
        pids = sorted(pid for pid in grades if pid in store)
        missing = sorted(pid for pid in grades if pid not in store)
        for pid in missing:
            skipped.append((qid, f"passage embedding missing: {pid}"))
        if not pids:
            skipped.append((qid, "no judged passages with embeddings"))
            continue
        if all(grades[pid] == 0 for pid in pids):
            skipped.append((qid, "all judgments zero"))
            continue
        cand = store.matrix(pids)
        scores = model.scores(store[qid], cand)
        order = sorted(range(len(pids)), key=lambda i: (-scores[i], pids[i]))
        ranked = [pids[i] for i in order]
        for rank, i in enumerate(order, start=1):
            rows.append((qid, rank, pids[i], float(scores[i])))
        per_query[qid] = ndcg_at_k(ranked, {pid: grades[pid] for pid in pids}, k)
    mean = float(np.mean(list(per_query.values()))) if per_query else 0.0
    return EvalResult(mean_ndcg=mean, per_query=per_query, skipped=skipped, k=k, run_rows=rows)


def format_run_rows(rows: Sequence[tuple[str, int, str, float]]) -> str:
    """Tab-separated run lines: query_id, rank, passage_id, score."""
    return "".join(f"{qid}\t{rank}\t{pid}\t{score:.10g}\n" for qid, rank, pid, score in rows)
