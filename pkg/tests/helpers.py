from __future__ import annotations

import numpy as np

from entity_rag.corpus import Chunk, Corpus
from entity_rag.entities import EntityMention, LinkedEntity


def make_chunk(chunk_id: str, text: str = "testo", entities=(), doc_id: str = "d") -> Chunk:
    linked = tuple(
        LinkedEntity(q, q, "", 1.0, 0.0, 0.0, EntityMention(q, text, (0, 1))) for q in entities
    )
    return Chunk(chunk_id, doc_id, text, len(text.split()), 0.0, 1.0, linked_entities=linked)


def unit_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    m = rng.normal(size=(n, dim))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def corpus_of(*chunks: Chunk) -> Corpus:
    return Corpus(tuple(chunks), {})


def random_runsets(rng, n_sets: int, max_queries: int = 20, max_retrieved: int = 15, max_relevant: int = 6):
    """Yield lists of (query, gold, relevant, retrieved) tuples over a small id universe."""
    import string

    universe = [f"d{c}" for c in string.ascii_lowercase]
    for _ in range(n_sets):
        runs = []
        for q in range(rng.randint(0, max_queries)):
            relevant = rng.sample(universe, rng.randint(1, max_relevant))
            gold = rng.choice(relevant)
            retrieved = rng.sample(universe, rng.randint(0, max_retrieved))
            runs.append((f"q{q}", gold, relevant, retrieved))
        yield runs


def oracle_metrics(runs, ks=(1, 3, 5, 10)) -> dict:
    """Plain-loop reference values for every metric, written without the package."""
    n = len(runs)
    out = {"em": 0.0, "mrr_gold": 0.0, "mrr_rel": 0.0, "recall": 0.0, "precision": 0.0}
    out.update({f"r@{k}": 0.0 for k in ks})
    out.update({f"p@{k}": 0.0 for k in ks})
    if n == 0:
        return out
    for _, gold, relevant, retrieved in runs:
        if len(retrieved) > 0 and retrieved[0] == gold:
            out["em"] += 1
        for i in range(len(retrieved)):
            if retrieved[i] == gold:
                out["mrr_gold"] += 1 / (i + 1)
                break
        for i in range(len(retrieved)):
            if retrieved[i] in relevant:
                out["mrr_rel"] += 1 / (i + 1)
                break
        for k in ks:
            hits = 0
            for i in range(min(k, len(retrieved))):
                if retrieved[i] in relevant:
                    hits += 1
            out[f"r@{k}"] += hits / len(relevant)
            out[f"p@{k}"] += hits / k
        hits = 0
        for d in retrieved:
            if d in relevant:
                hits += 1
        out["recall"] += hits / len(relevant)
        out["precision"] += hits / len(retrieved) if retrieved else 0.0
    return {key: value / n for key, value in out.items()}
