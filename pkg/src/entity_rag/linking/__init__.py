from .candidates import (
    WIKIDATA_ENDPOINT,
    CandidateSource,
    FixtureCandidateSource,
    WikidataClient,
    fetch_candidates,
    make_candidate_source,
)
from .linker import (
    EntityLinker,
    LinkerConfig,
    dedupe_by_qid,
    hybrid_score,
    link_chunk,
    link_mention,
    link_query,
    popularity,
    score_candidate,
    select_candidate,
)
from .mentions import Gazetteer, MentionProvider

__all__ = [
    "WIKIDATA_ENDPOINT",
    "CandidateSource",
    "EntityLinker",
    "FixtureCandidateSource",
    "Gazetteer",
    "LinkerConfig",
    "MentionProvider",
    "WikidataClient",
    "dedupe_by_qid",
    "fetch_candidates",
    "hybrid_score",
    "link_chunk",
    "link_mention",
    "link_query",
    "make_candidate_source",
    "popularity",
    "score_candidate",
    "select_candidate",
]
