"""Exact flat inner-product index over chunk embeddings."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .embedding import EmbeddingProvider, FileEmbeddingStore, write_embeddings
from .errors import DataError, DimensionMismatchError, KeyNotFoundError, PreconditionError

UNIT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class DenseHit:
    chunk_id: str
    dense_score: float
    dense_rank: int


class DenseIndex:
    def __init__(self, ids: list[str], matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(ids):
            raise DataError(f"index has {len(ids)} ids but matrix shape {matrix.shape}")
        if len(set(ids)) != len(ids):
            raise DataError("duplicate chunk ids in index")
        norms = np.linalg.norm(matrix, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_TOLERANCE)
        if bad.size:
            raise DataError(f"row for {ids[bad[0]]!r} is not unit-norm ({norms[bad[0]]:.8f})")
        self.ids = list(ids)
        self.matrix = matrix
        self.matrix.setflags(write=False)
        self.dim = matrix.shape[1]
        # position of each id in ascending-id order, for tie-breaking
        self._id_order = np.argsort(np.array(self.ids, dtype=object), kind="stable")
        self._id_rank = np.empty(len(ids), dtype=np.int64)
        self._id_rank[self._id_order] = np.arange(len(ids))

    def __len__(self) -> int:
        return len(self.ids)

    def search(self, query_vec: np.ndarray, k: int) -> list[DenseHit]:
        """Top-``k`` rows by inner product, ties broken by ascending chunk id."""
        if k < 1:
            raise PreconditionError(f"k must be >= 1, got {k}")
        query_vec = np.asarray(query_vec, dtype=np.float64)
        if query_vec.shape != (self.dim,):
            raise DimensionMismatchError(
                f"query dimension {query_vec.shape[-1] if query_vec.ndim else 0}, index dimension {self.dim}"
            )
        scores = np.sum(self.matrix * query_vec, axis=1)
        # lexsort: last key is primary
        order = np.lexsort((self._id_rank, -scores))[: min(k, len(self.ids))]
        return [
            DenseHit(self.ids[i], float(scores[i]), rank)
            for rank, i in enumerate(order, start=1)
        ]

    def save(self, directory, manifest_extra: dict | None = None) -> Path:
        """Write ``embeddings.jsonl`` plus ``manifest.json``; returns the manifest path."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_embeddings(
            directory / "embeddings.jsonl",
            dict(zip(self.ids, self.matrix)),
            header={
                "dim": self.dim,
                "keys": "chunk_id",
                "prefixing": "texts embedded as given; any query/passage prefix is applied upstream",
            },
        )
        manifest = {"dim": self.dim, "ids": self.ids, "embeddings": "embeddings.jsonl"}
        manifest.update(manifest_extra or {})
        path = directory / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, directory) -> DenseIndex:
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
        store = FileEmbeddingStore.load(directory / manifest["embeddings"], manifest["dim"])
        return cls(manifest["ids"], np.stack([store.embed("", key=i) for i in manifest["ids"]]))


def build_index(corpus: Corpus, provider: EmbeddingProvider, dim: int | None = None) -> DenseIndex:
    if len(corpus) == 0:
        raise DataError("empty corpus")
    if dim is not None and provider.dim != dim:
        raise DimensionMismatchError(f"provider dimension {provider.dim}, configured {dim}")
    rows = []
    for chunk in corpus:
        try:
            vec = provider.embed(chunk.text, key=chunk.chunk_id)
        except KeyNotFoundError as exc:
            raise KeyNotFoundError(chunk.chunk_id, where="embedding provider") from exc
        if vec.shape != (provider.dim,):
            raise DimensionMismatchError(f"vector for {chunk.chunk_id!r} has shape {vec.shape}")
        rows.append(vec)
    return DenseIndex(corpus.ids, np.stack(rows))
