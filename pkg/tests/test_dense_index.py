from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entity_rag.corpus import Corpus
from entity_rag.dense_index import DenseIndex, build_index
from entity_rag.embedding import FileEmbeddingStore, HashEmbedder
from entity_rag.errors import DataError, DimensionMismatchError, KeyNotFoundError, PreconditionError
from helpers import make_chunk, unit_rows


def brute_force(ids, matrix, q, k):
    scored = []
    for cid, row in zip(ids, matrix):
        scored.append((-float(np.sum(row * q)), cid))
    scored.sort()
    return [cid for _, cid in scored[:k]]


def test_self_retrieval():
    rng = np.random.default_rng(0)
    m = unit_rows(rng, 20, 16)
    index = DenseIndex([f"c{i:02d}" for i in range(20)], m)
    hit = index.search(m[7], 1)[0]
    assert hit.chunk_id == "c07" and hit.dense_rank == 1
    assert hit.dense_score == pytest.approx(1.0, abs=1e-6)


def test_k_saturates():
    rng = np.random.default_rng(1)
    index = DenseIndex(["b", "a", "c"], unit_rows(rng, 3, 4))
    hits = index.search(rng.normal(size=4), 10)
    assert sorted(h.chunk_id for h in hits) == ["a", "b", "c"]
    assert [h.dense_rank for h in hits] == [1, 2, 3]
    assert [h.dense_score for h in hits] == sorted((h.dense_score for h in hits), reverse=True)


def test_ties_break_by_chunk_id():
    row = np.array([1.0, 0.0])
    index = DenseIndex(["z", "m", "a", "q"], np.stack([row, row, row, np.array([0.0, 1.0])]))
    assert [h.chunk_id for h in index.search(row, 4)] == ["a", "m", "z", "q"]


def test_random_index_matches_oracle():
    rng = np.random.default_rng(2)
    m = unit_rows(rng, 100, 32)
    ids = [f"id{j}" for j in rng.permutation(100)]
    q = rng.normal(size=32)
    assert [h.chunk_id for h in DenseIndex(ids, m).search(q, 10)] == brute_force(ids, m, q, 10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 40), st.integers(1, 50))
def test_exactness_property(seed, n, k):
    rng = np.random.default_rng(seed)
    m = unit_rows(rng, n, 8)
    # duplicate some rows to force exact ties
    if n > 2:
        m[rng.integers(0, n)] = m[0]
    ids = [f"c{j:03d}" for j in rng.permutation(n)]
    q = rng.normal(size=8)
    assert [h.chunk_id for h in DenseIndex(ids, m).search(q, k)] == brute_force(ids, m, q, k)


def test_validation():
    with pytest.raises(DataError, match="unit-norm"):
        DenseIndex(["a"], np.array([[2.0, 0.0]]))
    with pytest.raises(DataError, match="duplicate"):
        DenseIndex(["a", "a"], np.eye(2))
    index = DenseIndex(["a", "b"], np.eye(2))
    with pytest.raises(DimensionMismatchError):
        index.search(np.ones(3), 1)
    with pytest.raises(PreconditionError):
        index.search(np.ones(2), 0)


def test_build_index_preserves_corpus_order():
    corpus = Corpus((make_chunk("x", "uno"), make_chunk("a", "due"), make_chunk("m", "tre")), {})
    index = build_index(corpus, HashEmbedder(16))
    assert index.ids == ["x", "a", "m"] and index.matrix.shape == (3, 16)


def test_build_index_errors(tmp_path):
    with pytest.raises(DataError, match="empty corpus"):
        build_index(Corpus((), {}), HashEmbedder(8))
    store = FileEmbeddingStore({"a": np.array([1.0, 0.0])}, 2)
    corpus = Corpus((make_chunk("a"), make_chunk("b")), {})
    with pytest.raises(KeyNotFoundError, match="'b'"):
        build_index(corpus, store)
    with pytest.raises(DimensionMismatchError):
        build_index(corpus, HashEmbedder(8), dim=16)


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    index = DenseIndex(["a", "b", "c"], unit_rows(rng, 3, 5))
    manifest = index.save(tmp_path / "idx", {"config_fingerprint": "abc"})
    assert '"config_fingerprint": "abc"' in manifest.read_text()
    loaded = DenseIndex.load(tmp_path / "idx")
    assert loaded.ids == index.ids
    np.testing.assert_allclose(loaded.matrix, index.matrix, atol=1e-15)
