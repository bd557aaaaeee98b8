"""Benchmark loaders: the custom record format and SQuAD-style datasets."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any

from ..corpus import Chunk, Corpus, count_tokens, read_json, validate_json
from ..errors import DataError, SchemaError

QUESTION_TYPES = ("factual", "synthesis", "inference", "unknown")


@dataclass(frozen=True)
class BenchmarkRecord:
    query: str
    question_type: str
    gold_answer_id: str
    relevant_doc_ids: frozenset[str]
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "relevant_doc_ids", frozenset(self.relevant_doc_ids))
        if self.gold_answer_id not in self.relevant_doc_ids:
            raise DataError(f"gold answer {self.gold_answer_id!r} is not among the relevant documents")


_CUSTOM_SCHEMA = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["query", "question_type", "gold_answer_id", "relevant_doc_ids"],
        "properties": {
            "query": {"type": "string", "minLength": 1},
            "question_type": {"enum": list(QUESTION_TYPES)},
            "gold_answer_id": {"type": "string", "minLength": 1},
            "relevant_doc_ids": {"type": "array", "items": {"type": "string"}, "minItems": 1},
            "metadata": {"type": "object"},
        },
    },
}

_SQUAD_SCHEMA = {
    "type": "object",
    "required": ["data"],
    "properties": {
        "data": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["paragraphs"],
                "properties": {
                    "title": {"type": "string"},
                    "paragraphs": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["context", "qas"],
                            "properties": {
                                "context": {"type": "string", "minLength": 1},
                                "qas": {
                                    "type": "array",
                                    "items": {
                                        "type": "object",
                                        "required": ["question", "id"],
                                        "properties": {
                                            "question": {"type": "string"},
                                            "id": {"type": ["string", "integer"]},
                                        },
                                    },
                                },
                            },
                        },
                    },
                },
            },
        }
    },
}


def load_custom_benchmark(path) -> list[BenchmarkRecord]:
    raw = read_json(path)
    validate_json(raw, _CUSTOM_SCHEMA, str(path))
    records = []
    for i, item in enumerate(raw):
        if item["gold_answer_id"] not in item["relevant_doc_ids"]:
            raise SchemaError(
                f"{path}: $[{i}].gold_answer_id: {item['gold_answer_id']!r} is not in relevant_doc_ids"
            )
        records.append(
            BenchmarkRecord(
                query=item["query"],
                question_type=item["question_type"],
                gold_answer_id=item["gold_answer_id"],
                relevant_doc_ids=frozenset(item["relevant_doc_ids"]),
                metadata=dict(item.get("metadata", {})),
            )
        )
    return records


def context_id(context: str) -> str:
    """Stable chunk id for a passage: 16 hex digits of its SHA-256."""
    return hashlib.sha256(context.encode("utf-8")).hexdigest()[:16]


def load_squad_style(path) -> tuple[Corpus, list[BenchmarkRecord]]:
    """Each distinct context becomes one chunk and the single gold answer of its questions."""
    raw = read_json(path)
    validate_json(raw, _SQUAD_SCHEMA, str(path))
    chunks: dict[str, Chunk] = {}
    records: list[BenchmarkRecord] = []
    for article in raw["data"]:
        title = article.get("title", "squad")
        for paragraph in article["paragraphs"]:
            context = paragraph["context"]
            cid = context_id(context)
            if cid not in chunks:
                chunks[cid] = Chunk(cid, title, context, count_tokens(context), 0.0, 0.0)
            for qa in paragraph["qas"]:
                records.append(
                    BenchmarkRecord(
                        query=qa["question"],
                        question_type="unknown",
                        gold_answer_id=cid,
                        relevant_doc_ids=frozenset({cid}),
                        metadata={"squad_id": str(qa["id"]), "title": title},
                    )
                )
    return Corpus(tuple(chunks.values()), {"source": f"squad-style:{path}"}), records


def check_against_corpus(records: list[BenchmarkRecord], corpus: Corpus) -> None:
    for i, rec in enumerate(records):
        missing = sorted(d for d in rec.relevant_doc_ids if d not in corpus)
        if missing:
            raise DataError(f"benchmark record {i} ({rec.query!r}) references unknown chunk {missing[0]!r}")


def records_to_json(records: list[BenchmarkRecord]) -> list[dict]:
    return [
        {
            "query": r.query,
            "question_type": r.question_type,
            "gold_answer_id": r.gold_answer_id,
            "relevant_doc_ids": sorted(r.relevant_doc_ids),
            "metadata": r.metadata,
        }
        for r in records
    ]
