from .benchmarks import (
    QUESTION_TYPES,
    BenchmarkRecord,
    check_against_corpus,
    context_id,
    load_custom_benchmark,
    load_squad_style,
    records_to_json,
)
from .judge import ChatJudge, ConstantJudge, JudgeScore, build_judge_prompt, parse_judge_output
from .methods import EvalReport, Method2Report, build_report, run_method1, run_method2, run_method3
from .metrics import (
    K_VALUES,
    RetrievalRun,
    exact_match,
    general_recall_precision,
    mrr_gold,
    mrr_rel_docs,
    precision_at_k,
    recall_at_k,
)

__all__ = [
    "K_VALUES",
    "QUESTION_TYPES",
    "BenchmarkRecord",
    "ChatJudge",
    "ConstantJudge",
    "EvalReport",
    "JudgeScore",
    "Method2Report",
    "RetrievalRun",
    "build_judge_prompt",
    "build_report",
    "check_against_corpus",
    "context_id",
    "exact_match",
    "general_recall_precision",
    "load_custom_benchmark",
    "load_squad_style",
    "mrr_gold",
    "mrr_rel_docs",
    "parse_judge_output",
    "precision_at_k",
    "recall_at_k",
    "records_to_json",
    "run_method1",
    "run_method2",
    "run_method3",
]
