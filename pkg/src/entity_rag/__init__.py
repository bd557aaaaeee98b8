"""Entity-aware retrieval-augmented generation over lecture transcripts."""

from __future__ import annotations

from .config import PipelineConfig, load_config
from .corpus import Chunk, Corpus, TranscriptSegment, chunk_transcript, load_corpus, save_corpus
from .dense_index import DenseHit, DenseIndex, build_index
from .embedding import FileEmbeddingStore, HashEmbedder, similarity
from .errors import ConfigError, DataError, EntityRagError, TransportError
from .pipeline import Pipeline, RerankParams

__version__ = "0.1.0"

__all__ = [
    "Chunk",
    "ConfigError",
    "Corpus",
    "DataError",
    "DenseHit",
    "DenseIndex",
    "EntityRagError",
    "FileEmbeddingStore",
    "HashEmbedder",
    "Pipeline",
    "PipelineConfig",
    "RerankParams",
    "TranscriptSegment",
    "TransportError",
    "build_index",
    "chunk_transcript",
    "load_config",
    "load_corpus",
    "save_corpus",
    "similarity",
]
