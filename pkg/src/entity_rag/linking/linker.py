"""Candidate disambiguation with a blend of context similarity and list position."""

from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from ..corpus import Chunk, Corpus
from ..embedding import EmbeddingProvider, similarity
from ..entities import EntityCandidate, EntityMention, LinkedEntity
from .candidates import CandidateSource, fetch_candidates
from .mentions import MentionProvider

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinkerConfig:
    alpha: float = 0.9
    max_candidates: int = 7
    language: str = "it"
    mode: str = "fixture"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.max_candidates < 1:
            raise ValueError(f"max_candidates must be >= 1, got {self.max_candidates}")
        if self.mode not in ("live", "fixture"):
            raise ValueError(f"mode must be 'live' or 'fixture', got {self.mode!r}")


def popularity(api_rank: int) -> float:
    """Inverse-rank prior; the first candidate (rank 0) scores 1."""
    if api_rank < 0:
        raise ValueError(f"api_rank must be >= 0, got {api_rank}")
    return 1.0 / (api_rank + 1)


def hybrid_score(sim: float, pop: float, alpha: float) -> float:
    return alpha * sim + (1.0 - alpha) * pop


def candidate_text(cand: EntityCandidate) -> str:
    return f"{cand.label} {cand.description}"


def score_candidate(
    mention: EntityMention, cand: EntityCandidate, provider: EmbeddingProvider, cfg: LinkerConfig
) -> tuple[float, float]:
    """Return ``(similarity, hybrid)`` for one candidate of ``mention``."""
    sim = similarity(provider.embed(mention.sentence_context), provider.embed(candidate_text(cand)))
    return sim, hybrid_score(sim, popularity(cand.api_rank), cfg.alpha)


def select_candidate(scored: list[tuple[EntityCandidate, float, float]]):
    """Highest hybrid wins; ties go to the lower api_rank, then the smaller qid."""
    if not scored:
        return None
    return min(scored, key=lambda item: (-item[2], item[0].api_rank, item[0].qid))


def link_mention(
    mention: EntityMention, provider: EmbeddingProvider, cfg: LinkerConfig, source: CandidateSource
) -> LinkedEntity | None:
    candidates = fetch_candidates(mention.surface, cfg, source)
    scored = [(c, *score_candidate(mention, c, provider, cfg)) for c in candidates]
    best = select_candidate(scored)
    if best is None:
        return None
    cand, sim, hybrid = best
    return LinkedEntity(
        qid=cand.qid,
        label=cand.label,
        description=cand.description,
        popularity=popularity(cand.api_rank),
        similarity=sim,
        hybrid_score=hybrid,
        mention=mention,
    )


def dedupe_by_qid(entities) -> tuple[LinkedEntity, ...]:
    """Keep one entity per qid (highest hybrid, earliest on ties), in first-seen order."""
    best: dict[str, LinkedEntity] = {}
    for ent in entities:
        current = best.get(ent.qid)
        if current is None or ent.hybrid_score > current.hybrid_score:
            best[ent.qid] = ent
    return tuple(best.values())


class EntityLinker:
    def __init__(
        self,
        provider: EmbeddingProvider,
        source: CandidateSource,
        mentions: MentionProvider,
        cfg: LinkerConfig | None = None,
    ):
        self.provider = provider
        self.source = source
        self.mentions = mentions
        self.cfg = cfg or LinkerConfig()

    def link_mention(self, mention: EntityMention) -> LinkedEntity | None:
        return link_mention(mention, self.provider, self.cfg, self.source)

    def _link_all(self, mentions) -> tuple[LinkedEntity, ...]:
        linked = (self.link_mention(m) for m in mentions)
        return dedupe_by_qid(e for e in linked if e is not None)

    def link_chunk(self, chunk: Chunk) -> Chunk:
        """Return ``chunk`` with mentions and linked entities recomputed from its text.

        Any error aborts before a new chunk is built, so callers never see a
        partially enriched chunk.
        """
        mentions = self.mentions.extract_mentions(chunk.text)
        entities = self._link_all(mentions)
        return dataclasses.replace(chunk, mentions=tuple(mentions), linked_entities=entities)

    def link_query(self, query: str) -> frozenset[str]:
        mentions = self.mentions.extract_mentions(query, single_sentence=True)
        return frozenset(e.qid for e in self._link_all(mentions))

    def link_corpus(self, corpus: Corpus, workers: int = 1) -> Corpus:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                chunks = list(pool.map(self.link_chunk, corpus.chunks))
        else:
            chunks = [self.link_chunk(c) for c in corpus.chunks]
        n_entities = sum(len(c.linked_entities) for c in chunks)
        logger.info("linked %d entities across %d chunks", n_entities, len(chunks))
        return Corpus(tuple(chunks), dict(corpus.metadata))


def link_chunk(chunk, provider, cfg, source, mentions) -> Chunk:
    return EntityLinker(provider, source, mentions, cfg).link_chunk(chunk)


def link_query(query, provider, cfg, source, mentions) -> frozenset[str]:
    return EntityLinker(provider, source, mentions, cfg).link_query(query)
