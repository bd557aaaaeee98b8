"""Transcript ingestion: sentence splitting, token-bounded chunking, JSON persistence.

Chunks never cross a ``doc_id`` boundary and never cut a sentence. Chunks that
could not honour the token bounds carry a ``short`` or ``oversized`` flag
instead of being merged or cut.
"""

from __future__ import annotations

import json
import logging
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema

from ._text import default_abbreviations
from .entities import EntityMention, LinkedEntity
from .errors import DataError, KeyNotFoundError, PreconditionError, SchemaError

logger = logging.getLogger(__name__)

# terminal punctuation, optionally followed by closing quotes/brackets
_TERMINATOR_RE = re.compile(r"[.!?]+[\"'»”’)\]]*")
_SENTENCE_START_RE = re.compile(r"\s+[\"'«“‘(\[]*(\w)")


@dataclass(frozen=True)
class TranscriptSegment:
    text: str
    start_time: float
    end_time: float
    doc_id: str

    def __post_init__(self):
        if not self.text.strip():
            raise PreconditionError(f"empty transcript segment in doc {self.doc_id!r}")
        if self.start_time < 0 or self.end_time < self.start_time:
            raise PreconditionError(
                f"bad timestamps ({self.start_time}, {self.end_time}) in doc {self.doc_id!r}"
            )


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    doc_id: str
    text: str
    token_count: int
    start_time: float
    end_time: float
    mentions: tuple[EntityMention, ...] = ()
    linked_entities: tuple[LinkedEntity, ...] = ()
    short: bool = False
    oversized: bool = False

    @property
    def entity_ids(self) -> frozenset[str]:
        return frozenset(e.qid for e in self.linked_entities)

    @property
    def flagged(self) -> bool:
        return self.short or self.oversized

    def to_dict(self) -> dict[str, Any]:
        return {
            "chunk_id": self.chunk_id,
            "doc_id": self.doc_id,
            "text": self.text,
            "token_count": self.token_count,
            "start_time": self.start_time,
            "end_time": self.end_time,
            "mentions": [m.to_dict() for m in self.mentions],
            "linked_entities": [e.to_dict() for e in self.linked_entities],
            "flags": {"short": self.short, "oversized": self.oversized},
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Chunk:
        flags = d.get("flags", {})
        return cls(
            chunk_id=d["chunk_id"],
            doc_id=d["doc_id"],
            text=d["text"],
            token_count=int(d["token_count"]),
            start_time=float(d["start_time"]),
            end_time=float(d["end_time"]),
            mentions=tuple(EntityMention.from_dict(m) for m in d.get("mentions", [])),
            linked_entities=tuple(LinkedEntity.from_dict(e) for e in d.get("linked_entities", [])),
            short=bool(flags.get("short", False)),
            oversized=bool(flags.get("oversized", False)),
        )


@dataclass(frozen=True)
class Corpus:
    chunks: tuple[Chunk, ...]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "chunks", tuple(self.chunks))
        seen: dict[str, Chunk] = {}
        for chunk in self.chunks:
            if chunk.chunk_id in seen:
                raise DataError(f"duplicate chunk_id {chunk.chunk_id!r}")
            seen[chunk.chunk_id] = chunk
        object.__setattr__(self, "_by_id", seen)

    def __len__(self) -> int:
        return len(self.chunks)

    def __iter__(self):
        return iter(self.chunks)

    def __contains__(self, chunk_id: object) -> bool:
        return chunk_id in self._by_id

    def get(self, chunk_id: str) -> Chunk:
        try:
            return self._by_id[chunk_id]
        except KeyError:
            raise KeyNotFoundError(chunk_id, where="corpus") from None

    @property
    def ids(self) -> list[str]:
        return [c.chunk_id for c in self.chunks]


def split_sentences(
    text: str, abbreviations: Iterable[str] | None = None
) -> list[tuple[str, tuple[int, int]]]:
    """Split ``text`` on terminal punctuation followed by an uppercase start or end of text.

    Returns ``(sentence, (start, end))`` pairs where ``text[start:end] == sentence``.
    Everything between consecutive spans is whitespace.
    """
    abbrevs = default_abbreviations() if abbreviations is None else frozenset(abbreviations)
    out: list[tuple[str, tuple[int, int]]] = []
    pos = 0
    for m in _TERMINATOR_RE.finditer(text):
        end = m.end()
        if end < len(text):
            nxt = _SENTENCE_START_RE.match(text, end)
            if nxt is None or not nxt.group(1).isupper():
                continue
        if m.group().startswith(".") and _is_abbreviation(text, m.start(), abbrevs):
            continue
        _append_sentence(text, pos, end, out)
        pos = end
    _append_sentence(text, pos, len(text), out)
    return out


def _is_abbreviation(text: str, dot: int, abbrevs: frozenset[str]) -> bool:
    word_start = dot
    while word_start > 0 and not text[word_start - 1].isspace():
        word_start -= 1
    word = text[word_start : dot + 1]
    if len(word) == 2 and word[0].isalpha() and word[0].isupper():
        return True  # initial, as in "J. Smith"
    return word.lower().lstrip("\"'«“(") in abbrevs


def _append_sentence(text: str, start: int, end: int, out: list) -> None:
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    if start < end:
        out.append((text[start:end], (start, end)))


def count_tokens(text: str) -> int:
    return len(text.split())


def chunk_transcript(
    segments: Sequence[TranscriptSegment],
    min_tokens: int = 20,
    max_tokens: int = 300,
    abbreviations: Iterable[str] | None = None,
) -> list[Chunk]:
    """Greedily pack whole sentences into chunks of at most ``max_tokens`` tokens.

    A chunk is closed when the next sentence would push it past ``max_tokens``.
    Chunks under ``min_tokens`` are still emitted but flagged ``short``; a lone
    sentence longer than ``max_tokens`` is emitted by itself and flagged
    ``oversized``. Output is ordered by ``doc_id`` then time.
    """
    if min_tokens > max_tokens:
        raise PreconditionError(f"min_tokens ({min_tokens}) > max_tokens ({max_tokens})")
    if abbreviations is not None:
        abbreviations = frozenset(abbreviations)

    by_doc: dict[str, list[TranscriptSegment]] = {}
    for seg in segments:
        by_doc.setdefault(seg.doc_id, []).append(seg)

    chunks: list[Chunk] = []
    for doc_id in sorted(by_doc):
        doc_segments = by_doc[doc_id]
        for prev, cur in zip(doc_segments, doc_segments[1:]):
            if cur.start_time < prev.start_time:
                raise PreconditionError(f"segments of doc {doc_id!r} are not sorted by start_time")
        chunks.extend(_chunk_document(doc_id, doc_segments, min_tokens, max_tokens, abbreviations))
    return chunks


def _chunk_document(doc_id, segments, min_tokens, max_tokens, abbreviations) -> list[Chunk]:
    pieces, ranges, offset = [], [], 0
    for seg in segments:
        piece = seg.text.strip()
        pieces.append(piece)
        ranges.append((offset, offset + len(piece), seg))
        offset += len(piece) + 1
    doc_text = " ".join(pieces)

    out: list[Chunk] = []

    def emit(group, oversized=False):
        start, end = group[0][1][0], group[-1][1][1]
        covered = [seg for a, b, seg in ranges if a < end and b > start]
        text = doc_text[start:end]
        n = count_tokens(text)
        chunk = Chunk(
            chunk_id=f"{doc_id}-c{len(out):03d}",
            doc_id=doc_id,
            text=text,
            token_count=n,
            start_time=min(s.start_time for s in covered),
            end_time=max(s.end_time for s in covered),
            short=not oversized and n < min_tokens,
            oversized=oversized,
        )
        if chunk.flagged:
            logger.debug("flagged chunk %s (%d tokens)", chunk.chunk_id, n)
        out.append(chunk)

    buf: list = []
    buf_tokens = 0
    for sentence in split_sentences(doc_text, abbreviations):
        n = count_tokens(sentence[0])
        if n > max_tokens:
            if buf:
                emit(buf)
                buf, buf_tokens = [], 0
            emit([sentence], oversized=True)
            continue
        if buf and buf_tokens + n > max_tokens:
            emit(buf)
            buf, buf_tokens = [], 0
        buf.append(sentence)
        buf_tokens += n
    if buf:
        emit(buf)
    return out


_MENTION_SCHEMA = {
    "type": "object",
    "required": ["surface", "sentence_context", "char_span"],
    "properties": {
        "surface": {"type": "string"},
        "sentence_context": {"type": "string"},
        "char_span": {
            "type": "array",
            "items": {"type": "integer", "minimum": 0},
            "minItems": 2,
            "maxItems": 2,
        },
    },
}

_CHUNK_SCHEMA = {
    "type": "object",
    "required": [
        "chunk_id", "doc_id", "text", "token_count", "start_time", "end_time",
        "mentions", "linked_entities",
    ],
    "properties": {
        "chunk_id": {"type": "string", "minLength": 1},
        "doc_id": {"type": "string"},
        "text": {"type": "string"},
        "token_count": {"type": "integer", "minimum": 0},
        "start_time": {"type": "number", "minimum": 0},
        "end_time": {"type": "number", "minimum": 0},
        "mentions": {"type": "array", "items": _MENTION_SCHEMA},
        "linked_entities": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["qid", "label", "popularity", "similarity", "hybrid_score", "mention"],
                "properties": {
                    "qid": {"type": "string", "pattern": "^Q[0-9]+$"},
                    "label": {"type": "string"},
                    "description": {"type": "string"},
                    "popularity": {"type": "number"},
                    "similarity": {"type": "number"},
                    "hybrid_score": {"type": "number"},
                    "mention": _MENTION_SCHEMA,
                },
            },
        },
        "flags": {
            "type": "object",
            "properties": {"short": {"type": "boolean"}, "oversized": {"type": "boolean"}},
        },
    },
}

# a bare array of chunks, or an object that also carries corpus metadata
_CORPUS_SCHEMAS = {
    list: {"type": "array", "items": _CHUNK_SCHEMA},
    dict: {
        "type": "object",
        "required": ["chunks"],
        "properties": {
            "metadata": {"type": "object", "additionalProperties": {"type": "string"}},
            "chunks": {"type": "array", "items": _CHUNK_SCHEMA},
        },
    },
}


def validate_json(instance: Any, schema: dict, source: str) -> None:
    """Raise SchemaError pointing at the deepest offending JSON path.

    ``schema`` may be a single schema or a ``{python_type: schema}`` dispatch
    table for formats with more than one accepted top-level shape.
    """
    if all(isinstance(k, type) for k in schema):
        for py_type, sub in schema.items():
            if isinstance(instance, py_type):
                schema = sub
                break
        else:
            expected = " or ".join(t.__name__ for t in schema)
            raise SchemaError(f"{source}: $: top level must be {expected}")
    validator = jsonschema.Draft202012Validator(schema)
    error = jsonschema.exceptions.best_match(validator.iter_errors(instance))
    if error is not None:
        raise SchemaError(f"{source}: {error.json_path}: {error.message}")


def read_json(path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: malformed JSON: {exc}") from exc
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def corpus_to_json(corpus: Corpus) -> str:
    payload = {"metadata": dict(sorted(corpus.metadata.items())), "chunks": [c.to_dict() for c in corpus]}
    return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def save_corpus(corpus: Corpus, path) -> None:
    Path(path).write_text(corpus_to_json(corpus), encoding="utf-8")


def load_corpus(path) -> Corpus:
    raw = read_json(path)
    validate_json(raw, _CORPUS_SCHEMAS, str(path))
    if isinstance(raw, list):
        records, metadata = raw, {}
    else:
        records, metadata = raw["chunks"], raw.get("metadata", {})
    ids = [r["chunk_id"] for r in records]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise DataError(f"{path}: duplicate chunk_id {dupes[0]!r}")
    return Corpus(tuple(Chunk.from_dict(r) for r in records), dict(metadata))


def load_transcript_file(path) -> list[TranscriptSegment]:
    """Read one transcript: a list of segments, or ``{"doc_id", "segments"}``.

    ``doc_id`` defaults to the file stem when absent.
    """
    raw = read_json(path)
    validate_json(raw, _TRANSCRIPT_SCHEMAS, str(path))
    if isinstance(raw, list):
        doc_id, segs = Path(path).stem, raw
    else:
        doc_id, segs = raw.get("doc_id", Path(path).stem), raw["segments"]
    return [
        TranscriptSegment(
            text=s["text"],
            start_time=float(s["start_time"]),
            end_time=float(s["end_time"]),
            doc_id=s.get("doc_id", doc_id),
        )
        for s in segs
    ]


_SEGMENT_SCHEMA = {
    "type": "object",
    "required": ["text", "start_time", "end_time"],
    "properties": {
        "text": {"type": "string"},
        "start_time": {"type": "number", "minimum": 0},
        "end_time": {"type": "number", "minimum": 0},
        "doc_id": {"type": "string"},
    },
}

_TRANSCRIPT_SCHEMAS = {
    list: {"type": "array", "items": _SEGMENT_SCHEMA},
    dict: {
        "type": "object",
        "required": ["segments"],
        "properties": {
            "doc_id": {"type": "string"},
            "segments": {"type": "array", "items": _SEGMENT_SCHEMA},
        },
    },
}


def ingest_directory(
    directory, min_tokens: int = 20, max_tokens: int = 300, abbreviations=None
) -> list[Chunk]:
    segments: list[TranscriptSegment] = []
    for path in sorted(Path(directory).glob("*.json")):
        segments.extend(load_transcript_file(path))
    if not segments:
        raise DataError(f"no transcript segments found under {directory}")
    return chunk_transcript(segments, min_tokens, max_tokens, abbreviations)
