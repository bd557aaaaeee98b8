from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from entity_rag.evaluation import (
    BenchmarkRecord,
    RetrievalRun,
    exact_match,
    general_recall_precision,
    mrr_gold,
    mrr_rel_docs,
    precision_at_k,
    recall_at_k,
)
from entity_rag.errors import PreconditionError
from helpers import oracle_metrics, random_runsets


def run(retrieved, gold="a", relevant=("a",)):
    return RetrievalRun(BenchmarkRecord("q", "factual", gold, frozenset(relevant)), tuple(retrieved))


def package_metrics(rows):
    runs = [RetrievalRun(BenchmarkRecord(q, "factual", g, frozenset(rel)), tuple(ret)) for q, g, rel, ret in rows]
    out = {"em": exact_match(runs), "mrr_gold": mrr_gold(runs), "mrr_rel": mrr_rel_docs(runs)}
    out["recall"], out["precision"] = general_recall_precision(runs)
    for k in (1, 3, 5, 10):
        out[f"r@{k}"] = recall_at_k(runs, k)
        out[f"p@{k}"] = precision_at_k(runs, k)
    return out


class TestExactMatch:
    def test_half(self):
        assert exact_match([run(["a", "b"]), run(["b", "a"])]) == 0.5

    def test_perfect(self):
        assert exact_match([run(["a"]), run(["a", "x"])]) == 1.0

    def test_empty_runs(self):
        assert exact_match([run([]), run([])]) == 0.0
        assert exact_match([]) == 0.0


class TestAtK:
    def test_partial(self):
        r = [run(["a", "x", "b"], relevant=("a", "b"))]
        assert recall_at_k(r, 3) == 1.0
        assert precision_at_k(r, 3) == pytest.approx(2 / 3, abs=1e-15)

    def test_singleton_identity(self):
        runs = [run(["a", "x"]), run(["x", "a"]), run(["y"])]
        assert recall_at_k(runs, 1) == precision_at_k(runs, 1) == exact_match(runs)

    def test_disjoint(self):
        r = [run(["x", "y"], relevant=("a", "b"))]
        assert recall_at_k(r, 5) == precision_at_k(r, 5) == 0.0

    def test_short_list_keeps_fixed_denominator(self):
        assert precision_at_k([run(["a"])], 10) == 0.1

    def test_bad_k(self):
        with pytest.raises(PreconditionError):
            recall_at_k([run(["a"])], 0)


class TestMRR:
    def test_third(self):
        assert mrr_gold([run(["x", "y", "a"])]) == pytest.approx(1 / 3, abs=1e-15)

    def test_first_relevant_rule(self):
        r = [run(["b", "x"], gold="a", relevant=("a", "b"))]
        assert mrr_rel_docs(r) == 1.0 and mrr_gold(r) == 0.0


class TestGeneral:
    def test_values(self):
        assert general_recall_precision([run(["a"], relevant=("a", "b"))]) == (0.5, 1.0)
        assert general_recall_precision([run([], relevant=("a", "b"))]) == (0.0, 0.0)
        assert general_recall_precision([run(["b", "a"], relevant=("a", "b"))]) == (1.0, 1.0)


def test_duplicate_ids_rejected():
    with pytest.raises(PreconditionError):
        run(["a", "a"])


def test_matches_oracle_on_random_runsets():
    rng = random.Random(11)
    for rows in random_runsets(rng, 40):
        expected, got = oracle_metrics(rows), package_metrics(rows)
        for key in expected:
            assert got[key] == pytest.approx(expected[key], abs=1e-12), key


ids = st.sampled_from(list("abcdefghij"))


@given(st.lists(st.tuples(st.lists(ids, min_size=1, max_size=4, unique=True),
                          st.lists(ids, max_size=10, unique=True)), max_size=8))
def test_metric_bounds_and_identities(cases):
    rows = [(f"q{i}", rel[0], rel, ret) for i, (rel, ret) in enumerate(cases)]
    m = package_metrics(rows)
    assert all(0.0 <= v <= 1.0 for v in m.values())
    # recall@k is monotone in k; the gold's reciprocal rank bounds EM from above
    assert m["r@1"] <= m["r@3"] <= m["r@5"] <= m["r@10"]
    assert m["em"] <= m["mrr_gold"] <= m["mrr_rel"]
