"""Candidate retrieval from Wikidata, live or from a local fixture."""

from __future__ import annotations

import logging
from typing import Protocol

import httpx

from ..corpus import read_json, validate_json
from ..entities import EntityCandidate
from ..errors import ConfigError, PreconditionError, SchemaError
from ..http import RateLimiter, ResponseCache, RetryPolicy, make_client, request_json

logger = logging.getLogger(__name__)

WIKIDATA_ENDPOINT = "https://www.wikidata.org/w/api.php"

_FIXTURE_SCHEMA = {
    "type": "object",
    "additionalProperties": {
        "type": "array",
        "items": {
            "type": "object",
            "required": ["qid", "label"],
            "properties": {
                "qid": {"type": "string", "pattern": "^Q[0-9]+$"},
                "label": {"type": "string"},
                "description": {"type": "string"},
            },
        },
    },
}


class CandidateSource(Protocol):
    def search(self, surface: str, language: str, limit: int) -> list[dict]:
        """Raw candidates in API order: ``[{"qid", "label", "description"}]``."""
        ...


class FixtureCandidateSource:
    """Candidates read from ``{"surface": [{"qid", "label", "description"}]}``.

    Lookup is exact first, then case-insensitive. Unknown surfaces have no
    candidates.
    """

    def __init__(self, entries: dict[str, list[dict]]):
        self.entries = entries
        self._folded = {}
        for surface, cands in entries.items():
            self._folded.setdefault(surface.casefold(), cands)

    @classmethod
    def load(cls, path) -> FixtureCandidateSource:
        raw = read_json(path)
        validate_json(raw, _FIXTURE_SCHEMA, str(path))
        return cls(raw)

    def search(self, surface: str, language: str, limit: int) -> list[dict]:
        cands = self.entries.get(surface)
        if cands is None:
            cands = self._folded.get(surface.casefold(), [])
        return [
            {"qid": c["qid"], "label": c["label"], "description": c.get("description", "")}
            for c in cands[:limit]
        ]


class WikidataClient:
    """``wbsearchentities`` client: rate limited, retried, cached on disk by (surface, language)."""

    def __init__(
        self,
        endpoint: str = WIKIDATA_ENDPOINT,
        cache_dir=None,
        requests_per_second: float = 1.0,
        retry: RetryPolicy | None = None,
        transport: httpx.BaseTransport | None = None,
        timeout: float = 10.0,
        sleep=None,
    ):
        self.endpoint = endpoint
        self.cache = ResponseCache(cache_dir) if cache_dir else None
        self.retry = retry or RetryPolicy()
        self.limiter = RateLimiter(requests_per_second, sleep=sleep) if sleep else RateLimiter(requests_per_second)
        self._client = make_client(timeout, transport)
        self._sleep = sleep
        self.requests_sent = 0

    def search(self, surface: str, language: str, limit: int) -> list[dict]:
        key = (surface, language)
        if self.cache is not None:
            cached = self.cache.get(key)
            if cached is not None:
                return cached[:limit]
        params = {
            "action": "wbsearchentities",
            "format": "json",
            "language": language,
            "search": surface,
            "limit": limit,
        }
        kwargs = {"sleep": self._sleep} if self._sleep is not None else {}
        self.requests_sent += 1
        body = request_json(self._client, "GET", self.endpoint, params=params,
                            retry=self.retry, limiter=self.limiter, **kwargs)
        if not isinstance(body, dict) or not isinstance(body.get("search", []), list):
            raise SchemaError(f"unexpected wbsearchentities response for {surface!r}")
        results = [
            {"qid": item["id"], "label": item.get("label", ""), "description": item.get("description", "")}
            for item in body.get("search", [])
            if isinstance(item, dict) and "id" in item
        ]
        if self.cache is not None:
            self.cache.put(key, results)
        return results[:limit]

    def close(self) -> None:
        self._client.close()


def fetch_candidates(surface: str, cfg, source: CandidateSource) -> list[EntityCandidate]:
    if not surface.strip():
        raise PreconditionError("empty mention surface")
    raw = source.search(surface, cfg.language, cfg.max_candidates)[: cfg.max_candidates]
    return [
        EntityCandidate(r["qid"], r["label"], r.get("description") or "", api_rank=i)
        for i, r in enumerate(raw)
    ]


def make_candidate_source(cfg, fixture_path=None, allow_live: bool = False, **live_kwargs) -> CandidateSource:
    if cfg.mode == "fixture":
        if fixture_path is None:
            raise ConfigError("linker.fixture_path is required in fixture mode")
        return FixtureCandidateSource.load(fixture_path)
    if cfg.mode == "live":
        if not allow_live:
            raise ConfigError(
                "linker.mode is 'live' but network access was not enabled; "
                "re-run with --live to query the public Wikidata API, or set linker.mode: fixture"
            )
        return WikidataClient(**live_kwargs)
    raise ConfigError(f"unknown linker mode {cfg.mode!r}")
