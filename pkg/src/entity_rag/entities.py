"""Entity records attached to chunks and queries."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any

QID_RE = re.compile(r"Q[0-9]+")


@dataclass(frozen=True)
class EntityMention:
    surface: str
    sentence_context: str
    char_span: tuple[int, int]

    def to_dict(self) -> dict[str, Any]:
        return {
            "surface": self.surface,
            "sentence_context": self.sentence_context,
            "char_span": list(self.char_span),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> EntityMention:
        start, end = d["char_span"]
        return cls(d["surface"], d["sentence_context"], (int(start), int(end)))


@dataclass(frozen=True)
class EntityCandidate:
    qid: str
    label: str
    description: str
    api_rank: int

    def __post_init__(self):
        if self.api_rank < 0:
            raise ValueError(f"api_rank must be >= 0, got {self.api_rank}")
        if not QID_RE.fullmatch(self.qid):
            raise ValueError(f"not a Wikidata QID: {self.qid!r}")


@dataclass(frozen=True)
class LinkedEntity:
    qid: str
    label: str
    description: str
    popularity: float
    similarity: float
    hybrid_score: float
    mention: EntityMention

    def to_dict(self) -> dict[str, Any]:
        return {
            "qid": self.qid,
            "label": self.label,
            "description": self.description,
            "popularity": self.popularity,
            "similarity": self.similarity,
            "hybrid_score": self.hybrid_score,
            "mention": self.mention.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> LinkedEntity:
        return cls(
            qid=d["qid"],
            label=d["label"],
            description=d.get("description", ""),
            popularity=float(d["popularity"]),
            similarity=float(d["similarity"]),
            hybrid_score=float(d["hybrid_score"]),
            mention=EntityMention.from_dict(d["mention"]),
        )
