"""End-to-end retrieval: embed the query, search the pool, link the query, re-rank."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .corpus import Corpus
from .dense_index import DenseIndex, build_index
from .embedding import EmbeddingProvider
from .linking import EntityLinker
from .reranking import CrossScorer, RerankConfig, ScoredCandidate, rerank

logger = logging.getLogger(__name__)


@dataclass
class RerankParams:
    """Strategy-independent knobs; ``pool_size=None`` picks the per-strategy default."""

    beta: float = 0.5
    rrf_k: int = 60
    pool_size: int | None = None
    cross_top_n: int = 20

    def config_for(self, strategy: str) -> RerankConfig:
        return RerankConfig(strategy, self.beta, self.rrf_k, self.pool_size, self.cross_top_n)


@dataclass
class Pipeline:
    corpus: Corpus
    index: DenseIndex
    embedder: EmbeddingProvider
    linker: EntityLinker | None
    strategy: str = "rrf"
    params: RerankParams = field(default_factory=RerankParams)
    cross_scorer: CrossScorer | None = None
    fingerprint: str = ""

    def __post_init__(self):
        self._query_entities: dict[str, frozenset[str]] = {}

    @classmethod
    def build(cls, corpus: Corpus, embedder: EmbeddingProvider, linker: EntityLinker | None, **kwargs) -> Pipeline:
        return cls(corpus, build_index(corpus, embedder), embedder, linker, **kwargs)

    def query_entities(self, query: str) -> frozenset[str]:
        if self.linker is None:
            return frozenset()
        if query not in self._query_entities:
            self._query_entities[query] = self.linker.link_query(query)
        return self._query_entities[query]

    def retrieve(self, query: str, strategy: str | None = None, ignore_entities: bool = False) -> list[ScoredCandidate]:
        """Final ranking for ``query``.

        ``ignore_entities`` zeroes every entity score while keeping the fusion
        machinery, which isolates the contribution of the entity signal.
        """
        cfg = self.params.config_for(strategy or self.strategy)
        pool = self.index.search(self.embedder.embed(query, key=query), cfg.pool_size)
        if ignore_entities or cfg.strategy == "dense":
            entities: frozenset[str] = frozenset()
        else:
            entities = self.query_entities(query)
        return rerank(pool, query, entities, self.corpus, cfg, self.cross_scorer)

    def context(self, ranked: list[ScoredCandidate], k: int | None = None) -> list[tuple[str, str]]:
        chosen = ranked if k is None else ranked[:k]
        return [(c.chunk_id, self.corpus.get(c.chunk_id).text) for c in chosen]
