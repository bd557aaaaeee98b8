"""The three evaluation methods and their reports.

* Method 1 scores the final re-ranked list, without generation.
* Method 2 generates from the top 3 chunks and asks a judge for three 1-10 scores.
* Method 3 runs the full pipeline and scores only the chunks the generator cited.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field

from ..errors import EntityRagError
from ..generation import GenerationRequest, Generator, generate
from . import metrics as M
from .benchmarks import BenchmarkRecord
from .judge import CRITERIA, Judge, JudgeScore, build_judge_prompt, parse_judge_output

logger = logging.getLogger(__name__)

METHOD2_CONTEXT_K = 3


@dataclass
class EvalReport:
    method: int
    strategy: str
    benchmark: str
    config_fingerprint: str
    n_queries: int
    em: float
    mrr_gold: float
    mrr_rel_docs: float
    recall_at: dict[int, float] | None = None
    precision_at: dict[int, float] | None = None
    recall_general: float | None = None
    precision_general: float | None = None
    by_question_type: dict[str, dict[str, float]] = field(default_factory=dict)
    per_query: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("recall_at", "precision_at"):
            if d[key] is None:
                del d[key]
            else:
                d[key] = {str(k): v for k, v in sorted(d[key].items())}
        for key in ("recall_general", "precision_general"):
            if d[key] is None:
                del d[key]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def _summary(runs: Sequence[M.RetrievalRun], with_at_k: bool, with_general: bool) -> dict:
    out = {"em": M.exact_match(runs), "mrr_gold": M.mrr_gold(runs), "mrr_rel_docs": M.mrr_rel_docs(runs)}
    if with_at_k:
        out["recall_at"] = {k: M.recall_at_k(runs, k) for k in M.K_VALUES}
        out["precision_at"] = {k: M.precision_at_k(runs, k) for k in M.K_VALUES}
    if with_general:
        out["recall_general"], out["precision_general"] = M.general_recall_precision(runs)
    return out


def _per_query_row(run: M.RetrievalRun, with_at_k: bool, with_general: bool, extra: dict) -> dict:
    rec = run.record
    row = {
        "query": rec.query,
        "question_type": rec.question_type,
        "gold_answer_id": rec.gold_answer_id,
        "retrieved_ids": list(run.retrieved_ids),
        "em": M.em_one(run),
        "rr_gold": M.rr_gold_one(run),
        "rr_rel_docs": M.rr_rel_one(run),
    }
    if with_at_k:
        row["recall_at"] = {str(k): M.recall_one(run, k) for k in M.K_VALUES}
        row["precision_at"] = {str(k): M.precision_one(run, k) for k in M.K_VALUES}
        # recall@k cannot reach 1 when there are more relevant docs than k
        row["relevant_exceeds_k"] = [k for k in M.K_VALUES if len(rec.relevant_doc_ids) > k]
    if with_general:
        row["recall"] = M.general_recall_one(run)
        row["precision"] = M.general_precision_one(run)
    row.update(extra)
    return row


def build_report(
    runs: Sequence[M.RetrievalRun],
    method: int,
    strategy: str = "",
    benchmark: str = "",
    fingerprint: str = "",
    extras: Sequence[dict] | None = None,
) -> EvalReport:
    with_at_k, with_general = method == 1, method == 3
    summary = _summary(runs, with_at_k, with_general)
    strata: dict[str, list[M.RetrievalRun]] = {}
    for run in runs:
        strata.setdefault(run.record.question_type, []).append(run)
    by_type = {}
    for qtype in sorted(strata):
        s = _summary(strata[qtype], with_at_k, with_general)
        by_type[qtype] = {
            "n_queries": len(strata[qtype]),
            "em": s["em"],
            "mrr_gold": s["mrr_gold"],
            "mrr_rel_docs": s["mrr_rel_docs"],
        }
    extras = extras or [{} for _ in runs]
    return EvalReport(
        method=method,
        strategy=strategy,
        benchmark=benchmark,
        config_fingerprint=fingerprint,
        n_queries=len(runs),
        by_question_type=by_type,
        per_query=[_per_query_row(r, with_at_k, with_general, x) for r, x in zip(runs, extras)],
        **summary,
    )


def run_method1(pipeline, benchmark: Sequence[BenchmarkRecord], strategy: str | None = None,
                benchmark_name: str = "", ignore_entities: bool = False) -> EvalReport:
    strategy = strategy or pipeline.strategy
    runs = []
    for i, record in enumerate(benchmark):
        try:
            ranked = pipeline.retrieve(record.query, strategy, ignore_entities=ignore_entities)
        except EntityRagError:
            logger.error("method 1 aborted at query %d: %r", i, record.query)
            raise
        runs.append(M.RetrievalRun(record, tuple(c.chunk_id for c in ranked)))
    return build_report(runs, 1, strategy, benchmark_name, pipeline.fingerprint)


def run_method3(pipeline, benchmark: Sequence[BenchmarkRecord], generator: Generator,
                strategy: str | None = None, benchmark_name: str = "", template: str | None = None,
                ignore_entities: bool = False) -> EvalReport:
    strategy = strategy or pipeline.strategy
    runs, extras = [], []
    for i, record in enumerate(benchmark):
        try:
            ranked = pipeline.retrieve(record.query, strategy, ignore_entities=ignore_entities)
            request = GenerationRequest.build(record.query, pipeline.context(ranked), template)
            result = generate(request, generator)
        except EntityRagError:
            logger.error("method 3 aborted at query %d: %r", i, record.query)
            raise
        runs.append(M.RetrievalRun(record, result.cited_chunk_ids))
        extras.append({"abstained": result.abstained, "dropped_citations": result.dropped_citations})
    return build_report(runs, 3, strategy, benchmark_name, pipeline.fingerprint, extras)


@dataclass
class Method2Report:
    strategy: str
    benchmark: str
    config_fingerprint: str
    n_queries: int
    n_valid: int
    n_excluded: int
    averages: dict[str, float] | None
    per_query: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def average_scores(scores: Sequence[JudgeScore | None]) -> dict[str, float] | None:
    valid = [s for s in scores if s is not None]
    if not valid:
        return None
    return {name: sum(getattr(s, name) for s in valid) / len(valid) for name in CRITERIA}


def run_method2(pipeline, benchmark: Sequence[BenchmarkRecord], generator: Generator, judge: Judge,
                strategy: str | None = None, benchmark_name: str = "", template: str | None = None,
                judge_template: str | None = None, context_k: int = METHOD2_CONTEXT_K) -> Method2Report:
    """Judge answers generated from the top ``context_k`` chunks.

    Replies that are not valid JSON with three integers in [1, 10] exclude
    their query from the averages; the number of exclusions is reported.
    """
    strategy = strategy or pipeline.strategy
    scores: list[JudgeScore | None] = []
    rows = []
    for i, record in enumerate(benchmark):
        try:
            ranked = pipeline.retrieve(record.query, strategy)
            context = pipeline.context(ranked, context_k)
            request = GenerationRequest.build(record.query, context, template)
            result = generate(request, generator)
            prompt = build_judge_prompt(
                record.query, "\n\n".join(text for _, text in context), result.answer_text, judge_template
            )
            score = parse_judge_output(judge.judge(prompt))
        except EntityRagError:
            logger.error("method 2 aborted at query %d: %r", i, record.query)
            raise
        if score is None:
            logger.warning("judge output for query %d is invalid; excluded", i)
        scores.append(score)
        rows.append({
            "query": record.query,
            "question_type": record.question_type,
            "context_ids": [cid for cid, _ in context],
            "valid": score is not None,
            "scores": asdict(score) if score is not None else None,
        })
    n_valid = sum(s is not None for s in scores)
    return Method2Report(
        strategy=strategy,
        benchmark=benchmark_name,
        config_fingerprint=pipeline.fingerprint,
        n_queries=len(benchmark),
        n_valid=n_valid,
        n_excluded=len(benchmark) - n_valid,
        averages=average_scores(scores),
        per_query=rows,
    )
