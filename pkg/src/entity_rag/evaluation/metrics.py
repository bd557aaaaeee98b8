"""Retrieval metrics over per-query runs.

A run pairs a benchmark record with an ordered list of retrieved chunk ids:
the final ranking (fixed length) for retrieval-only evaluation, or the cited
ids (variable length) when the generator acts as a filter. An absent gold or
relevant document contributes a reciprocal rank of 0; an empty retrieval is an
exact-match miss with precision 0. All means over zero runs are 0.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from ..errors import PreconditionError
from .benchmarks import BenchmarkRecord

K_VALUES = (1, 3, 5, 10)


@dataclass(frozen=True)
class RetrievalRun:
    record: BenchmarkRecord
    retrieved_ids: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "retrieved_ids", tuple(self.retrieved_ids))
        if len(set(self.retrieved_ids)) != len(self.retrieved_ids):
            raise PreconditionError(f"duplicate ids in retrieval for {self.record.query!r}")


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def _hits(run: RetrievalRun, k: int | None = None) -> int:
    ids = run.retrieved_ids if k is None else run.retrieved_ids[:k]
    return sum(1 for d in ids if d in run.record.relevant_doc_ids)


def em_one(run: RetrievalRun) -> float:
    return float(bool(run.retrieved_ids) and run.retrieved_ids[0] == run.record.gold_answer_id)


def recall_one(run: RetrievalRun, k: int) -> float:
    return _hits(run, k) / len(run.record.relevant_doc_ids)


def precision_one(run: RetrievalRun, k: int) -> float:
    return _hits(run, k) / k


def rr_gold_one(run: RetrievalRun) -> float:
    try:
        return 1.0 / (run.retrieved_ids.index(run.record.gold_answer_id) + 1)
    except ValueError:
        return 0.0


def rr_rel_one(run: RetrievalRun) -> float:
    for pos, doc in enumerate(run.retrieved_ids, start=1):
        if doc in run.record.relevant_doc_ids:
            return 1.0 / pos
    return 0.0


def general_recall_one(run: RetrievalRun) -> float:
    return _hits(run) / len(run.record.relevant_doc_ids)


def general_precision_one(run: RetrievalRun) -> float:
    return _hits(run) / len(run.retrieved_ids) if run.retrieved_ids else 0.0


def _check_k(k: int) -> None:
    if k < 1:
        raise PreconditionError(f"k must be >= 1, got {k}")


def exact_match(runs: Sequence[RetrievalRun]) -> float:
    return _mean([em_one(r) for r in runs])


def recall_at_k(runs: Sequence[RetrievalRun], k: int) -> float:
    _check_k(k)
    return _mean([recall_one(r, k) for r in runs])


def precision_at_k(runs: Sequence[RetrievalRun], k: int) -> float:
    """Hits in the top ``k`` over ``k``, even when fewer than ``k`` ids were retrieved."""
    _check_k(k)
    return _mean([precision_one(r, k) for r in runs])


def mrr_gold(runs: Sequence[RetrievalRun]) -> float:
    return _mean([rr_gold_one(r) for r in runs])


def mrr_rel_docs(runs: Sequence[RetrievalRun]) -> float:
    return _mean([rr_rel_one(r) for r in runs])


def general_recall_precision(runs: Sequence[RetrievalRun]) -> tuple[float, float]:
    return _mean([general_recall_one(r) for r in runs]), _mean([general_precision_one(r) for r in runs])
