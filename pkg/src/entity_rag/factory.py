"""Builds pipeline components from a :class:`PipelineConfig`."""

from __future__ import annotations

import logging

from ._text import read_word_list
from .config import PipelineConfig
from .corpus import Corpus, ingest_directory, load_corpus
from .errors import DataError
from .embedding import EmbeddingProvider, make_provider
from .evaluation.judge import ChatJudge, ConstantJudge
from .generation import ExtractiveStubGenerator, HttpChatClient, default_template, load_template
from .http import RetryPolicy
from .linking import EntityLinker, Gazetteer, LinkerConfig, make_candidate_source
from .pipeline import Pipeline, RerankParams
from .reranking import make_cross_scorer

logger = logging.getLogger(__name__)


def make_embedder(cfg: PipelineConfig) -> EmbeddingProvider:
    return make_provider(cfg.embedder.kind, cfg.embedding_dim, cfg.embedder_seed, cfg.path(cfg.embedder.path))


def abbreviations(cfg: PipelineConfig):
    path = cfg.path(cfg.chunking.abbreviations_path)
    return None if path is None else read_word_list(path)


def make_linker(cfg: PipelineConfig, embedder: EmbeddingProvider, allow_live: bool = False,
                transport=None) -> EntityLinker:
    lk = cfg.linker
    linker_cfg = LinkerConfig(lk.alpha, lk.max_candidates, lk.language, lk.mode)
    source = make_candidate_source(
        linker_cfg,
        fixture_path=cfg.path(lk.fixture_path),
        allow_live=allow_live,
        endpoint=lk.endpoint,
        cache_dir=cfg.out / lk.cache_dir if lk.cache_dir else None,
        requests_per_second=lk.requests_per_second,
        retry=RetryPolicy(lk.max_retries, lk.backoff_seconds),
        transport=transport,
    )
    gazetteer = Gazetteer.load(cfg.path(lk.gazetteer_path), lk.case_sensitive)
    gazetteer.abbreviations = abbreviations(cfg)
    return EntityLinker(embedder, source, gazetteer, linker_cfg)


def make_scorer(cfg: PipelineConfig, transport=None):
    r = cfg.rerank
    if r.cross_scorer == "http":
        return make_cross_scorer("http", r.cross_scorer_url,
                                 retry=RetryPolicy(r.max_retries, r.backoff_seconds), transport=transport)
    return make_cross_scorer(r.cross_scorer)


def make_generator(cfg: PipelineConfig, transport=None):
    g = cfg.generator
    if g.kind == "extractive":
        return ExtractiveStubGenerator()
    return HttpChatClient(
        g.url, g.model, g.api_key_env, audit_log=cfg.out / g.audit_log,
        max_concurrency=g.max_concurrency, retry=RetryPolicy(g.max_retries, g.backoff_seconds),
        transport=transport,
    )


def make_judge(cfg: PipelineConfig, transport=None):
    j = cfg.judge
    if j.kind == "constant":
        return ConstantJudge(*j.scores)
    return ChatJudge(HttpChatClient(j.url, j.model, j.api_key_env, audit_log=cfg.out / "judge_audit.jsonl",
                                    transport=transport))


def prompt_template(cfg: PipelineConfig) -> str:
    path = cfg.path(cfg.generator.template_path)
    return default_template() if path is None else load_template(path)


def judge_template(cfg: PipelineConfig) -> str | None:
    path = cfg.path(cfg.judge.template_path)
    return None if path is None else load_template(path)


def ensure_linked(corpus: Corpus, linker: EntityLinker, workers: int = 1) -> Corpus:
    if corpus.metadata.get("linked") == "true":
        return corpus
    logger.info("corpus is not entity-linked yet; linking %d chunks in memory", len(corpus))
    linked = linker.link_corpus(corpus, workers)
    return Corpus(linked.chunks, {**linked.metadata, "linked": "true"})


def ingest(cfg: PipelineConfig) -> Corpus:
    directory = cfg.path(cfg.transcripts_dir)
    chunks = ingest_directory(directory, cfg.chunking.min_tokens, cfg.chunking.max_tokens, abbreviations(cfg))
    return Corpus(tuple(chunks), {
        "config_fingerprint": cfg.fingerprint,
        "source": directory.name,
        "min_tokens": str(cfg.chunking.min_tokens),
        "max_tokens": str(cfg.chunking.max_tokens),
    })


def load_linked_corpus(cfg: PipelineConfig, linker: EntityLinker) -> Corpus:
    """Linked corpus file, else the plain corpus file, else the transcripts chunked in memory."""
    for key in (cfg.linked_corpus_path, cfg.corpus_path):
        path = cfg.path(key)
        if path.exists():
            return ensure_linked(load_corpus(path), linker, cfg.linker.workers)
    if cfg.transcripts_dir is None or not cfg.path(cfg.transcripts_dir).is_dir():
        raise DataError(f"no corpus at {cfg.path(cfg.corpus_path)}; run the ingest command first")
    logger.info("no corpus file yet; chunking %s in memory", cfg.path(cfg.transcripts_dir))
    return ensure_linked(ingest(cfg), linker, cfg.linker.workers)


def build_pipeline(cfg: PipelineConfig, corpus: Corpus | None = None, allow_live: bool = False,
                   transport=None) -> Pipeline:
    embedder = make_embedder(cfg)
    linker = make_linker(cfg, embedder, allow_live, transport)
    corpus = load_linked_corpus(cfg, linker) if corpus is None else ensure_linked(corpus, linker, cfg.linker.workers)
    r = cfg.rerank
    return Pipeline.build(
        corpus,
        embedder,
        linker,
        strategy=r.strategy,
        params=RerankParams(r.beta, r.rrf_k, r.pool_size, r.cross_top_n),
        cross_scorer=make_scorer(cfg, transport),
        fingerprint=cfg.fingerprint,
    )
