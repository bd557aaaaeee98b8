"""Grounded prompting and citation parsing.

The generator is told to cite chunks as ``[cit:<id>]`` and to answer exactly
``NO_RELEVANT_INFORMATION`` when the context is insufficient. The cited ids,
filtered to the ids actually in the context, become the system's retrieved set.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
from collections.abc import Collection, Sequence
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Protocol

import httpx

from ._text import content_tokens
from .corpus import split_sentences
from .errors import PreconditionError, TransportError
from .http import RetryPolicy, make_client, request_json

logger = logging.getLogger(__name__)

ABSTAIN = "NO_RELEVANT_INFORMATION"
CITATION_RE = re.compile(r"\[cit:([^\]\s]+)\]")
_PLACEHOLDER_RE = re.compile(r"\{(query|chunks)\}")


def chunk_marker(chunk_id: str) -> str:
    return f"[[chunk:{chunk_id}]]"


def default_template() -> str:
    return load_template(resources.files("entity_rag.data").joinpath("prompt_template.txt"))


def load_template(path) -> str:
    """Read a template file; leading ``#`` lines are comments and are dropped."""
    if isinstance(path, str):
        path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines(keepends=True)
    while lines and lines[0].startswith("#"):
        lines.pop(0)
    return "".join(lines)


def build_prompt(query: str, chunks: Sequence[tuple[str, str]], template: str) -> str:
    if not chunks:
        raise PreconditionError("cannot build a prompt without context chunks")
    missing = [p for p in ("{query}", "{chunks}") if p not in template]
    if missing:
        raise PreconditionError(f"prompt template lacks placeholder(s): {', '.join(missing)}")
    rendered = "\n\n".join(f"{chunk_marker(cid)}\n{text}" for cid, text in chunks)
    values = {"query": query, "chunks": rendered}
    # one pass, so placeholder-like text inside chunks is left alone
    return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], template)


@dataclass(frozen=True)
class GenerationRequest:
    query: str
    context_chunks: tuple[tuple[str, str], ...]
    instructions: str

    def __post_init__(self):
        ids = [cid for cid, _ in self.context_chunks]
        if not ids:
            raise PreconditionError("generation request has no context chunks")
        if len(set(ids)) != len(ids):
            raise PreconditionError("duplicate chunk ids in generation context")

    @property
    def chunk_ids(self) -> list[str]:
        return [cid for cid, _ in self.context_chunks]

    @classmethod
    def build(cls, query: str, chunks: Sequence[tuple[str, str]], template: str | None = None):
        chunks = tuple((cid, text) for cid, text in chunks)
        return cls(query, chunks, build_prompt(query, chunks, template or default_template()))


@dataclass(frozen=True)
class GenerationResult:
    answer_text: str
    cited_chunk_ids: tuple[str, ...]
    abstained: bool
    dropped_citations: int = 0


def parse_citations(answer_text: str, allowed_ids: Collection[str]) -> GenerationResult:
    allowed = set(allowed_ids)
    if ABSTAIN in answer_text:
        return GenerationResult(answer_text, (), True, 0)
    cited: list[str] = []
    dropped = 0
    for cid in CITATION_RE.findall(answer_text):
        if cid not in allowed:
            dropped += 1
        elif cid not in cited:
            cited.append(cid)
    if dropped:
        logger.warning("dropped %d citation(s) to ids outside the context", dropped)
    return GenerationResult(answer_text, tuple(cited), False, dropped)


class Generator(Protocol):
    def complete(self, request: GenerationRequest) -> str: ...


def generate(request: GenerationRequest, client: Generator) -> GenerationResult:
    return parse_citations(client.complete(request), request.chunk_ids)


class ExtractiveStubGenerator:
    """Cites every context chunk sharing a content word with the query, else abstains.

    The cited chunk's first sentence stands in for the answer.
    """

    def complete(self, request: GenerationRequest) -> str:
        query_tokens = content_tokens(request.query)
        parts = []
        for cid, text in request.context_chunks:
            if query_tokens & content_tokens(text):
                sentences = split_sentences(text)
                lead = sentences[0][0] if sentences else text
                parts.append(f"{lead} [cit:{cid}]")
        return "\n".join(parts) if parts else ABSTAIN


class HttpChatClient:
    """Chat-completion style endpoint (``choices[0].message.content``).

    Every exchange is appended to ``audit_log`` as one JSON line. The bearer
    token is read from the environment variable named by ``api_key_env``.
    """

    def __init__(self, url: str, model: str, api_key_env: str | None = "GENERATOR_API_KEY",
                 audit_log=None, max_concurrency: int = 4, retry: RetryPolicy | None = None,
                 transport: httpx.BaseTransport | None = None, timeout: float = 120.0,
                 temperature: float = 0.0, sleep=None):
        headers = {}
        token = os.environ.get(api_key_env) if api_key_env else None
        if token:
            headers["Authorization"] = f"Bearer {token}"
        self.url = url
        self.model = model
        self.temperature = temperature
        self.retry = retry or RetryPolicy()
        self.audit_log = Path(audit_log) if audit_log else None
        self._client = make_client(timeout, transport, headers)
        self._slots = threading.BoundedSemaphore(max_concurrency)
        self._audit_lock = threading.Lock()
        self._sleep = sleep

    def chat(self, prompt: str) -> str:
        payload = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        extra = {"sleep": self._sleep} if self._sleep is not None else {}
        with self._slots:
            body = request_json(self._client, "POST", self.url, json=payload, retry=self.retry, **extra)
        self._audit(payload, body)
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed chat response from {self.url}") from exc
        if not isinstance(content, str):
            raise TransportError(f"malformed chat response from {self.url}: content is not text")
        return content

    def complete(self, request: GenerationRequest) -> str:
        return self.chat(request.instructions)

    def _audit(self, payload, body) -> None:
        if self.audit_log is None:
            return
        line = json.dumps({"request": payload, "response": body}, ensure_ascii=False)
        with self._audit_lock:
            self.audit_log.parent.mkdir(parents=True, exist_ok=True)
            with open(self.audit_log, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
