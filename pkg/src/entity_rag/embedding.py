"""Embedding providers returning fixed-dimension, unit-norm vectors.

Two providers ship here. ``HashEmbedder`` is a deterministic, model-free
embedder for tests and desk-scale runs. ``FileEmbeddingStore`` serves vectors
precomputed elsewhere, for instance by a hosted sentence encoder.
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np

from ._text import word_tokens
from .errors import DataError, DimensionMismatchError, KeyNotFoundError, SchemaError

logger = logging.getLogger(__name__)

DEFAULT_DIM = 1024
NORM_TOLERANCE = 1e-3


@runtime_checkable
class EmbeddingProvider(Protocol):
    dim: int

    def embed(self, text: str, key: str | None = None) -> np.ndarray:
        """Return a unit vector for ``text``.

        ``key`` names a precomputed entry (a chunk id); providers that compute
        vectors from the text ignore it.
        """
        ...


def similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Inner product; cosine similarity for unit vectors.

    Elementwise products commute and are summed in one fixed order, so the
    result is exactly symmetric in its arguments.
    """
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(np.sum(a * b))


def _normalize(vec: np.ndarray) -> np.ndarray:
    return vec / np.linalg.norm(vec)


class HashEmbedder:
    """Signed feature hashing of word tokens, L2-normalised.

    Each token is hashed with a seeded 64-bit BLAKE2b digest: the high bits
    pick a bucket and the lowest bit picks the sign. Texts sharing vocabulary
    therefore get correlated vectors. A text with no tokens, or whose
    contributions cancel out, maps to the first basis vector.
    """

    def __init__(self, dim: int = DEFAULT_DIM, seed: int = 0):
        if dim < 1:
            raise ValueError(f"dim must be positive, got {dim}")
        self.dim = dim
        self.seed = seed
        self._key = seed.to_bytes(8, "little", signed=True)

    def _hash(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=self._key).digest()
        return int.from_bytes(digest, "little")

    def embed(self, text: str, key: str | None = None) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in word_tokens(text):
            h = self._hash(token)
            vec[(h >> 1) % self.dim] += 1.0 if h & 1 == 0 else -1.0
        if not vec.any():
            vec[0] = 1.0
            return vec
        return _normalize(vec)


class FileEmbeddingStore:
    """Precomputed vectors read eagerly from a JSON-lines file.

    Each line is ``{"key": str, "vector": [float, ...]}``. An optional first
    line without ``key`` is a header: ``{"header": {"dim": ..., "note": ...}}``.
    Keys are chunk ids for passages and the literal query string for queries;
    any query/passage prefixing is expected to have happened upstream.
    """

    def __init__(self, entries: dict[str, np.ndarray], dim: int, header: dict | None = None):
        self.dim = dim
        self.header = header or {}
        self._entries = entries

    @classmethod
    def load(cls, path, dim: int | None = None) -> FileEmbeddingStore:
        entries: dict[str, np.ndarray] = {}
        header: dict = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SchemaError(f"{path}:{lineno}: malformed JSON: {exc}") from exc
                if "key" not in record:
                    if lineno == 1 and "header" in record:
                        header = record["header"]
                        dim = dim or header.get("dim")
                        continue
                    raise SchemaError(f"{path}:{lineno}: missing 'key'")
                if "vector" not in record:
                    raise SchemaError(f"{path}:{lineno}: missing 'vector'")
                vec = np.asarray(record["vector"], dtype=np.float64)
                if dim is None:
                    dim = vec.shape[0]
                if vec.ndim != 1 or vec.shape[0] != dim:
                    raise DimensionMismatchError(
                        f"{path}:{lineno}: vector for {record['key']!r} has dimension "
                        f"{vec.shape[-1] if vec.ndim else 0}, expected {dim}"
                    )
                norm = float(np.linalg.norm(vec))
                if abs(norm - 1.0) > NORM_TOLERANCE:
                    raise DataError(
                        f"{path}:{lineno}: vector for {record['key']!r} has norm {norm:.6f}; "
                        "expected unit norm"
                    )
                if record["key"] in entries:
                    raise DataError(f"{path}:{lineno}: duplicate key {record['key']!r}")
                entries[record["key"]] = vec / norm
        if dim is None:
            raise DataError(f"{path}: no vectors and no header dimension")
        logger.info("loaded %d vectors (dim %d) from %s", len(entries), dim, path)
        return cls(entries, dim, header)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def embed(self, text: str, key: str | None = None) -> np.ndarray:
        lookup = text if key is None else key
        try:
            return self._entries[lookup]
        except KeyError:
            raise KeyNotFoundError(lookup) from None


def write_embeddings(path, vectors: dict[str, np.ndarray], header: dict | None = None) -> None:
    """Write ``vectors`` as JSON lines, in the insertion order of the mapping."""
    with open(Path(path), "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps({"header": header}, sort_keys=True) + "\n")
        for key, vec in vectors.items():
            fh.write(json.dumps({"key": key, "vector": [float(x) for x in vec]}, ensure_ascii=False) + "\n")


def make_provider(kind: str, dim: int = DEFAULT_DIM, seed: int = 0, path=None) -> EmbeddingProvider:
    if kind == "test":
        return HashEmbedder(dim, seed)
    if kind == "file":
        if path is None:
            raise DataError("file embedder requires a path")
        store = FileEmbeddingStore.load(path, dim)
        if store.dim != dim:
            raise DimensionMismatchError(f"{path}: store dimension {store.dim}, configured {dim}")
        return store
    raise DataError(f"unknown embedder kind {kind!r}")
