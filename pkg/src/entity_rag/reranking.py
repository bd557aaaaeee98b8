"""Entity-aware re-ranking of a dense candidate pool.

Strategies:

* ``dense``: the pool as retrieved (the no-entity baseline).
* ``weighted``: dense score plus ``beta`` times the entity overlap.
* ``rrf``: reciprocal rank fusion of the dense ranking and the entity ranking,
  both computed inside the pool.
* ``rrf_cross``: RRF, then the top ``cross_top_n`` are re-scored by an
  external cross-encoder behind :class:`CrossScorer`.

Every sort uses the total order (primary score desc, dense rank asc, chunk id
asc) so reruns give identical rankings.
"""

from __future__ import annotations

import dataclasses
import logging
from collections.abc import Collection, Sequence
from dataclasses import dataclass
from typing import Protocol

import httpx

from ._text import content_tokens
from .corpus import Corpus
from .dense_index import DenseHit
from .errors import PreconditionError, TransportError
from .http import RetryPolicy, make_client, request_json

logger = logging.getLogger(__name__)

STRATEGIES = ("dense", "weighted", "rrf", "rrf_cross")
DEFAULT_POOL = {"dense": 30, "weighted": 30, "rrf": 30, "rrf_cross": 50}


@dataclass(frozen=True)
class ScoredCandidate:
    chunk_id: str
    dense_score: float
    dense_rank: int
    entity_score: float = 0.0
    entity_rank: int = 0
    fused_score: float = 0.0
    final_rank: int = 0
    cross_score: float | None = None


@dataclass(frozen=True)
class RerankConfig:
    strategy: str = "rrf"
    beta: float = 0.5
    rrf_k: int = 60
    pool_size: int | None = None
    cross_top_n: int = 20

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.pool_size is None:
            object.__setattr__(self, "pool_size", DEFAULT_POOL[self.strategy])
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.rrf_k < 0:
            raise ValueError(f"rrf_k must be >= 0, got {self.rrf_k}")
        if self.pool_size < 1:
            raise ValueError(f"pool_size must be >= 1, got {self.pool_size}")
        if self.strategy == "rrf_cross" and not 1 <= self.cross_top_n <= self.pool_size:
            raise ValueError(f"cross_top_n ({self.cross_top_n}) must be in [1, pool_size={self.pool_size}]")


def entity_overlap(query_entities: Collection[str], chunk_entities: Collection[str]) -> float:
    """Fraction of the query's entities that the chunk also carries; 0 without query entities."""
    query_entities = set(query_entities)
    if not query_entities:
        return 0.0
    return len(query_entities & set(chunk_entities)) / len(query_entities)


def _tie_key(c: ScoredCandidate, primary: float):
    return (-primary, c.dense_rank, c.chunk_id)


def _with_entity_scores(pool: Sequence[DenseHit], query_entities, corpus: Corpus) -> list[ScoredCandidate]:
    return [
        ScoredCandidate(
            chunk_id=hit.chunk_id,
            dense_score=hit.dense_score,
            dense_rank=hit.dense_rank,
            entity_score=entity_overlap(query_entities, corpus.get(hit.chunk_id).entity_ids),
        )
        for hit in pool
    ]


def assign_entity_ranks(pool: Sequence[ScoredCandidate]) -> list[ScoredCandidate]:
    """Rank by entity score within the pool; returns candidates in their input order."""
    order = sorted(range(len(pool)), key=lambda i: _tie_key(pool[i], pool[i].entity_score))
    ranks = {i: r for r, i in enumerate(order, start=1)}
    return [dataclasses.replace(c, entity_rank=ranks[i]) for i, c in enumerate(pool)]


def _finalize(cands: list[ScoredCandidate], key) -> list[ScoredCandidate]:
    ordered = sorted(cands, key=key)
    return [dataclasses.replace(c, final_rank=r) for r, c in enumerate(ordered, start=1)]


def rerank_dense(pool: Sequence[DenseHit], query_entities, corpus: Corpus) -> list[ScoredCandidate]:
    cands = assign_entity_ranks(_with_entity_scores(pool, query_entities, corpus))
    cands = [dataclasses.replace(c, fused_score=c.dense_score) for c in cands]
    return _finalize(cands, lambda c: _tie_key(c, c.dense_score))


def rerank_weighted(
    pool: Sequence[DenseHit], query_entities, corpus: Corpus, beta: float = 0.5
) -> list[ScoredCandidate]:
    cands = assign_entity_ranks(_with_entity_scores(pool, query_entities, corpus))
    cands = [dataclasses.replace(c, fused_score=c.dense_score + beta * c.entity_score) for c in cands]
    return _finalize(cands, lambda c: _tie_key(c, c.fused_score))


def rrf_score(dense_rank: int, entity_rank: int, k: int = 60) -> float:
    return 1.0 / (k + dense_rank) + 1.0 / (k + entity_rank)


def rerank_rrf(
    pool: Sequence[DenseHit], query_entities, corpus: Corpus, rrf_k: int = 60
) -> list[ScoredCandidate]:
    if not pool:
        raise PreconditionError("cannot fuse an empty pool")
    cands = assign_entity_ranks(_with_entity_scores(pool, query_entities, corpus))
    cands = [
        dataclasses.replace(c, fused_score=rrf_score(c.dense_rank, c.entity_rank, rrf_k))
        for c in cands
    ]
    return _finalize(cands, lambda c: _tie_key(c, c.fused_score))


class CrossScorer(Protocol):
    def score(self, query: str, passages: Sequence[tuple[str, str]]) -> dict[str, float]:
        """Relevance of each ``(id, text)`` passage to ``query``, keyed by id."""
        ...


class OrderPreservingScorer:
    """Scores each passage with its negated input position, leaving the order untouched."""

    def score(self, query, passages):
        return {pid: -float(pos) for pos, (pid, _) in enumerate(passages, start=1)}


class TokenOverlapScorer:
    """Counts distinct non-stopword tokens shared with the query."""

    def score(self, query, passages):
        q = content_tokens(query)
        return {pid: float(len(q & content_tokens(text))) for pid, text in passages}


class HttpCrossScorer:
    """Client for an external cross-encoder service.

    Request ``{"query", "passages": [{"id", "text"}]}``, response
    ``{"scores": [{"id", "score"}]}``. Passages may be sent in batches.
    """

    def __init__(self, url: str, batch_size: int = 32, retry: RetryPolicy | None = None,
                 transport: httpx.BaseTransport | None = None, timeout: float = 60.0, sleep=None):
        self.url = url
        self.batch_size = batch_size
        self.retry = retry or RetryPolicy()
        self._client = make_client(timeout, transport)
        self._sleep = sleep

    def score(self, query, passages):
        scores: dict[str, float] = {}
        extra = {"sleep": self._sleep} if self._sleep is not None else {}
        for start in range(0, len(passages), self.batch_size):
            batch = passages[start : start + self.batch_size]
            body = request_json(
                self._client, "POST", self.url, retry=self.retry,
                json={"query": query, "passages": [{"id": pid, "text": text} for pid, text in batch]},
                **extra,
            )
            try:
                returned = {str(item["id"]): float(item["score"]) for item in body["scores"]}
            except (KeyError, TypeError, ValueError) as exc:
                raise TransportError(f"malformed cross-scorer response from {self.url}") from exc
            missing = [pid for pid, _ in batch if pid not in returned]
            if missing:
                raise TransportError(f"cross-scorer response lacks scores for {missing}")
            scores.update({pid: returned[pid] for pid, _ in batch})
        return scores


def make_cross_scorer(kind: str, url: str | None = None, **kwargs) -> CrossScorer:
    if kind == "order_preserving":
        return OrderPreservingScorer()
    if kind == "token_overlap":
        return TokenOverlapScorer()
    if kind == "http":
        if not url:
            raise ValueError("http cross scorer requires cross_scorer_url")
        return HttpCrossScorer(url, **kwargs)
    raise ValueError(f"unknown cross scorer kind {kind!r}")


def rerank_rrf_cross(
    pool: Sequence[DenseHit],
    query: str,
    query_entities,
    corpus: Corpus,
    scorer: CrossScorer,
    cfg: RerankConfig,
) -> list[ScoredCandidate]:
    """RRF over the whole pool, then cross-score the top ``cfg.cross_top_n``.

    Scorer failures propagate; there is no fallback to the RRF order.
    """
    fused = rerank_rrf(pool, query_entities, corpus, cfg.rrf_k)[: cfg.cross_top_n]
    passages = [(c.chunk_id, corpus.get(c.chunk_id).text) for c in fused]
    scores = scorer.score(query, passages)
    missing = [pid for pid, _ in passages if pid not in scores]
    if missing:
        raise TransportError(f"cross scorer returned no score for {missing}")
    rescored = [dataclasses.replace(c, cross_score=float(scores[c.chunk_id])) for c in fused]
    ordered = sorted(rescored, key=lambda c: (-c.cross_score, c.final_rank, c.chunk_id))
    return [dataclasses.replace(c, final_rank=r) for r, c in enumerate(ordered, start=1)]


def rerank(
    pool: Sequence[DenseHit],
    query: str,
    query_entities,
    corpus: Corpus,
    cfg: RerankConfig,
    scorer: CrossScorer | None = None,
) -> list[ScoredCandidate]:
    if cfg.strategy == "dense":
        return rerank_dense(pool, query_entities, corpus)
    if cfg.strategy == "weighted":
        return rerank_weighted(pool, query_entities, corpus, cfg.beta)
    if cfg.strategy == "rrf":
        return rerank_rrf(pool, query_entities, corpus, cfg.rrf_k)
    if scorer is None:
        raise PreconditionError("strategy rrf_cross needs a cross scorer")
    return rerank_rrf_cross(pool, query, query_entities, corpus, scorer, cfg)
