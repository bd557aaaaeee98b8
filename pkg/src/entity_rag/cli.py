"""Command-line entry point.

Every command reads one config file (``--config``), accepts ``--set key=value``
overrides, and writes its artifacts under ``output_dir`` stamped with the
config fingerprint. Failures print one JSON line on stderr and exit with
2 (config), 3 (data) or 4 (transport).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import factory
from .config import PipelineConfig, load_config, required_paths, validate_paths
from .corpus import Corpus, load_corpus, save_corpus
from .errors import ConfigError, EntityRagError
from .evaluation import (
    check_against_corpus,
    load_custom_benchmark,
    load_squad_style,
    run_method1,
    run_method2,
    run_method3,
)
from .generation import GenerationRequest, generate
from .reranking import STRATEGIES

logger = logging.getLogger("entity_rag")

PIPELINE_LABELS = {
    "dense": "Baseline",
    "weighted": "Weighted-Score",
    "rrf": "RRF",
    "rrf_cross": "RRF+Cross-Encoder",
}


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def cmd_ingest(cfg: PipelineConfig, args) -> int:
    corpus = factory.ingest(cfg)
    chunks = corpus.chunks
    out = Path(args.out) if args.out else cfg.path(cfg.corpus_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_corpus(corpus, out)
    flagged = sum(c.flagged for c in chunks)
    print(f"wrote {len(chunks)} chunks ({flagged} flagged) to {out}")
    return 0


def cmd_link(cfg: PipelineConfig, args) -> int:
    embedder = factory.make_embedder(cfg)
    linker = factory.make_linker(cfg, embedder, allow_live=args.live)
    src = Path(args.corpus) if args.corpus else cfg.path(cfg.corpus_path)
    if args.corpus or src.exists():
        corpus = load_corpus(src)
    else:
        corpus = factory.ingest(cfg)
    corpus = linker.link_corpus(corpus, cfg.linker.workers)
    corpus = Corpus(corpus.chunks, {
        **corpus.metadata,
        "linked": "true",
        "linker_mode": cfg.linker.mode,
        "config_fingerprint": cfg.fingerprint,
    })
    out = Path(args.out) if args.out else cfg.path(cfg.linked_corpus_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_corpus(corpus, out)
    n = sum(len(c.linked_entities) for c in corpus)
    print(f"linked {n} entities across {len(corpus)} chunks; wrote {out}")
    return 0


def cmd_index(cfg: PipelineConfig, args) -> int:
    pipeline = factory.build_pipeline(cfg, allow_live=args.live)
    out = Path(args.out) if args.out else cfg.out / "index"
    manifest = pipeline.index.save(out, {"config_fingerprint": cfg.fingerprint})
    print(f"indexed {len(pipeline.index)} chunks (dim {pipeline.index.dim}); manifest {manifest}")
    return 0


def _print_ranking(pipeline, query: str, strategy: str, top: int, with_answer: bool, cfg) -> None:
    ranked = pipeline.retrieve(query, strategy)
    print(f"# query: {query}")
    print(f"# strategy: {strategy}  query entities: {sorted(pipeline.query_entities(query))}")
    for c in ranked[:top]:
        print(f"{c.final_rank}\t{c.chunk_id}\t{c.fused_score:.6f}")
    if with_answer:
        request = GenerationRequest.build(query, pipeline.context(ranked), factory.prompt_template(cfg))
        result = generate(request, factory.make_generator(cfg))
        print("# answer:")
        print(result.answer_text)
        print(f"# cited: {list(result.cited_chunk_ids)}")


def cmd_query(cfg: PipelineConfig, args) -> int:
    pipeline = factory.build_pipeline(cfg, allow_live=args.live)
    _print_ranking(pipeline, args.text, args.strategy or cfg.rerank.strategy, args.top, args.generate, cfg)
    return 0


def cmd_repl(cfg: PipelineConfig, args) -> int:
    pipeline = factory.build_pipeline(cfg, allow_live=args.live)
    strategy = args.strategy or cfg.rerank.strategy
    print("type a question, or :q to quit", file=sys.stderr)
    for line in sys.stdin:
        query = line.strip()
        if query in (":q", ":quit", "exit"):
            break
        if query:
            _print_ranking(pipeline, query, strategy, args.top, args.generate, cfg)
            sys.stdout.flush()
    return 0


def _benchmark(cfg: PipelineConfig, name: str, allow_live: bool):
    if name == "custom":
        path = cfg.path(cfg.benchmarks.custom)
        if path is None:
            raise ConfigError("benchmarks.custom: required for --benchmark custom")
        pipeline = factory.build_pipeline(cfg, allow_live=allow_live)
        records = load_custom_benchmark(path)
        check_against_corpus(records, pipeline.corpus)
        return pipeline, records
    path = cfg.path(cfg.benchmarks.squad)
    if path is None:
        raise ConfigError("benchmarks.squad: required for --benchmark squad")
    corpus, records = load_squad_style(path)
    return factory.build_pipeline(cfg, corpus=corpus, allow_live=allow_live), records


def _evaluate(cfg, pipeline, records, method: int, strategy: str, benchmark: str, ignore_entities=False):
    if method == 1:
        return run_method1(pipeline, records, strategy, benchmark, ignore_entities=ignore_entities)
    if method == 3:
        return run_method3(pipeline, records, factory.make_generator(cfg), strategy, benchmark,
                           factory.prompt_template(cfg), ignore_entities=ignore_entities)
    return run_method2(pipeline, records, factory.make_generator(cfg), factory.make_judge(cfg), strategy,
                       benchmark, factory.prompt_template(cfg), factory.judge_template(cfg),
                       context_k=cfg.judge.context_k)


def cmd_evaluate(cfg: PipelineConfig, args) -> int:
    pipeline, records = _benchmark(cfg, args.benchmark, args.live)
    strategy = args.strategy or cfg.rerank.strategy
    report = _evaluate(cfg, pipeline, records, args.method, strategy, args.benchmark, args.ignore_entities)
    suffix = "_no_entities" if args.ignore_entities else ""
    out = Path(args.out) if args.out else (
        cfg.out / "reports" / f"method{args.method}_{args.benchmark}_{strategy}{suffix}.json"
    )
    _write(out, report.to_json())
    if args.method == 2:
        print(f"method 2 [{strategy}] valid={report.n_valid} excluded={report.n_excluded} "
              f"averages={report.averages}")
    else:
        print(f"method {args.method} [{strategy}] EM={report.em:.3f} MRR_gold={report.mrr_gold:.3f} "
              f"MRR_rel_docs={report.mrr_rel_docs:.3f}")
    print(f"wrote {out}")
    return 0


def format_table(reports, method: int) -> str:
    if method == 1:
        header = ["Pipeline", "EM", "R@1", "R@3", "R@5", "R@10", "P@1", "MRR_G", "MRR_RD"]
        rows = [
            [PIPELINE_LABELS[r.strategy], r.em, r.recall_at[1], r.recall_at[3], r.recall_at[5],
             r.recall_at[10], r.precision_at[1], r.mrr_gold, r.mrr_rel_docs]
            for r in reports
        ]
    else:
        header = ["Pipeline", "EM", "Recall", "Precision", "MRR_G", "MRR_RD"]
        rows = [
            [PIPELINE_LABELS[r.strategy], r.em, r.recall_general, r.precision_general, r.mrr_gold, r.mrr_rel_docs]
            for r in reports
        ]
    cells = [header] + [[row[0]] + [f"{v:.3f}" for v in row[1:]] for row in rows]
    widths = [max(len(line[i]) for line in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(line, widths)))
             for line in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def cmd_compare(cfg: PipelineConfig, args) -> int:
    if args.method not in (1, 3):
        raise ConfigError("compare supports --method 1 or 3")
    pipeline, records = _benchmark(cfg, args.benchmark, args.live)
    reports = [_evaluate(cfg, pipeline, records, args.method, s, args.benchmark) for s in args.strategies]
    table = format_table(reports, args.method)
    base = cfg.out / "reports" / f"compare_method{args.method}_{args.benchmark}"
    _write(base.with_suffix(".txt"), f"# config_fingerprint: {cfg.fingerprint}\n" + table)
    _write(base.with_suffix(".json"), json.dumps(
        {"config_fingerprint": cfg.fingerprint, "reports": [r.to_dict() for r in reports]},
        ensure_ascii=False, indent=2, sort_keys=True) + "\n")
    print(table, end="")
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "link": cmd_link,
    "index": cmd_index,
    "query": cmd_query,
    "repl": cmd_repl,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
}


def _parse_set(values: list[str]) -> dict[str, str]:
    out = {}
    for item in values:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="pipeline config (YAML or JSON)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value, e.g. rerank.beta=0.3")
    common.add_argument("--seed", type=int, help="seed for the test embedder")
    common.add_argument("--live", action="store_true", help="allow live Wikidata requests")
    common.add_argument("--verbose", "-v", action="store_true")

    parser = argparse.ArgumentParser(prog="entity-rag", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="chunk transcripts into a corpus file")
    p.add_argument("--transcripts", help="directory of transcript JSON files")
    p.add_argument("--out")

    p = sub.add_parser("link", parents=[common], help="entity-link every chunk of a corpus")
    p.add_argument("--corpus")
    p.add_argument("--out")

    p = sub.add_parser("index", parents=[common], help="embed the corpus and write the index manifest")
    p.add_argument("--out")

    for name in ("query", "repl"):
        p = sub.add_parser(name, parents=[common], help="rank chunks for a question" if name == "query"
                           else "interactive query loop")
        if name == "query":
            p.add_argument("text")
        p.add_argument("--strategy", choices=STRATEGIES)
        p.add_argument("--top", type=int, default=10)
        p.add_argument("--generate", action="store_true", help="also generate a cited answer")

    p = sub.add_parser("evaluate", parents=[common], help="run an evaluation method on a benchmark")
    p.add_argument("--method", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--benchmark", choices=("custom", "squad"), default="custom")
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--ignore-entities", action="store_true", help="zero all entity scores (ablation)")
    p.add_argument("--out")

    p = sub.add_parser("compare", parents=[common], help="side-by-side table over strategies")
    p.add_argument("--method", type=int, choices=(1, 3), default=1)
    p.add_argument("--benchmark", choices=("custom", "squad"), default="custom")
    p.add_argument("--strategies", nargs="+", choices=STRATEGIES, default=list(STRATEGIES))
    return parser


def _fail(exc: EntityRagError) -> int:
    payload = {"error": type(exc).__name__, "exit_code": exc.exit_code, "message": str(exc)}
    if isinstance(exc, ConfigError):
        payload["errors"] = exc.errors
    print(json.dumps(payload, ensure_ascii=False), file=sys.stderr)
    return exc.exit_code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        overrides = _parse_set(args.set)
        if args.seed is not None:
            overrides["seed"] = args.seed
            overrides["embedder.seed"] = args.seed
        if getattr(args, "transcripts", None):
            overrides["transcripts_dir"] = str(Path(args.transcripts).resolve())
        cfg = load_config(args.config, overrides)
        if args.command != "ingest" and cfg.linker.mode == "live" and not args.live:
            raise ConfigError(
                "linker.mode is 'live' but --live was not given; pass --live to allow requests "
                "to the public Wikidata API, or use linker.mode: fixture"
            )
        if args.command in ("evaluate", "compare"):
            bench_key = f"benchmarks.{args.benchmark}"
            validate_paths(cfg, required_paths(cfg, args.command) + [bench_key], required=(bench_key,))
        else:
            validate_paths(cfg, required_paths(cfg, args.command))
        return COMMANDS[args.command](cfg, args)
    except EntityRagError as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
