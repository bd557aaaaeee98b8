from __future__ import annotations

import json
import threading
import time

import httpx
import pytest

from entity_rag.errors import PreconditionError, TransportError
from entity_rag.generation import (
    ABSTAIN,
    ExtractiveStubGenerator,
    GenerationRequest,
    HttpChatClient,
    build_prompt,
    default_template,
    generate,
    load_template,
    parse_citations,
)
from entity_rag.http import RetryPolicy

CHUNKS = [("c1", "Il mercato dei cambi."), ("c2", "La moneta circola."), ("c3", "Adam Smith e la mano invisibile.")]


class TestPrompt:
    def test_markers_once_each(self):
        prompt = build_prompt("domanda?", CHUNKS[:2], default_template())
        assert prompt.count("[[chunk:c1]]") == 1 and prompt.count("[[chunk:c2]]") == 1
        assert "domanda?" in prompt
        assert "[cit:" in prompt and ABSTAIN in prompt

    def test_empty_chunks(self):
        with pytest.raises(PreconditionError):
            build_prompt("q", [], default_template())

    def test_deterministic(self):
        assert build_prompt("q", CHUNKS, default_template()) == build_prompt("q", CHUNKS, default_template())

    def test_missing_placeholder(self):
        with pytest.raises(PreconditionError, match="chunks"):
            build_prompt("q", CHUNKS, "solo {query}")

    def test_braces_in_text_are_left_alone(self):
        prompt = build_prompt("{chunks}?", [("c1", "testo {query}")], "{chunks}|{query}")
        assert prompt == "[[chunk:c1]]\ntesto {query}|{chunks}?"

    def test_template_comments_dropped(self, tmp_path):
        path = tmp_path / "t.txt"
        path.write_text("# nota\n# altra\nDomanda {query}\n{chunks}\n", encoding="utf-8")
        assert load_template(path) == "Domanda {query}\n{chunks}\n"
        assert not default_template().startswith("#")

    def test_request_validation(self):
        with pytest.raises(PreconditionError):
            GenerationRequest.build("q", [])
        with pytest.raises(PreconditionError, match="duplicate"):
            GenerationRequest.build("q", [("a", "x"), ("a", "y")])


class TestParseCitations:
    def test_dedup_in_order(self):
        result = parse_citations("... [cit:c2] ... [cit:c1] ... [cit:c2]", {"c1", "c2"})
        assert result.cited_chunk_ids == ("c2", "c1") and not result.abstained

    def test_sentinel(self):
        result = parse_citations(ABSTAIN, {"c1"})
        assert result.abstained and result.cited_chunk_ids == ()

    def test_unknown_ids_dropped_and_counted(self):
        result = parse_citations("[cit:ghost]", {"c1"})
        assert result.cited_chunk_ids == () and result.dropped_citations == 1

    def test_no_citations(self):
        result = parse_citations("risposta senza fonti", {"c1"})
        assert result.cited_chunk_ids == () and not result.abstained


class TestExtractiveStub:
    def test_cites_only_matching_chunk(self):
        request = GenerationRequest.build("Cosa dice Smith sulla mano invisibile?", CHUNKS)
        result = generate(request, ExtractiveStubGenerator())
        assert result.cited_chunk_ids == ("c3",)

    def test_abstains_without_overlap(self):
        request = GenerationRequest.build("Qual è la capitale della Francia?", CHUNKS)
        result = generate(request, ExtractiveStubGenerator())
        assert result.abstained and result.cited_chunk_ids == ()

    def test_stopwords_do_not_count(self):
        request = GenerationRequest.build("Il la e di?", CHUNKS)
        assert generate(request, ExtractiveStubGenerator()).abstained


def chat_response(content):
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": content}}]})


class TestHttpChatClient:
    def test_round_trip_and_audit(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TEST_KEY", "segreto")
        seen = []

        def handler(request):
            seen.append(request)
            return chat_response("Risposta [cit:c3] [cit:zz]")

        client = HttpChatClient("http://llm/v1/chat", "modello", api_key_env="TEST_KEY",
                                audit_log=tmp_path / "audit.jsonl", transport=httpx.MockTransport(handler))
        request = GenerationRequest.build("domanda", CHUNKS)
        result = generate(request, client)
        assert result.cited_chunk_ids == ("c3",) and result.dropped_citations == 1
        body = json.loads(seen[0].content)
        assert body["model"] == "modello" and body["temperature"] == 0.0
        assert body["messages"][0]["content"] == request.instructions
        assert seen[0].headers["authorization"] == "Bearer segreto"
        audit = [json.loads(line) for line in (tmp_path / "audit.jsonl").read_text().splitlines()]
        assert audit[0]["request"] == body
        assert audit[0]["response"]["choices"][0]["message"]["content"].startswith("Risposta")

    def test_500_is_a_hard_error_after_retries(self):
        calls = []

        def handler(request):
            calls.append(1)
            return httpx.Response(500)

        client = HttpChatClient("http://llm", "m", transport=httpx.MockTransport(handler),
                                retry=RetryPolicy(max_retries=2, backoff_seconds=0.0), sleep=lambda s: None)
        with pytest.raises(TransportError):
            client.chat("ciao")
        assert len(calls) == 3

    @pytest.mark.parametrize("body", [{"choices": []}, {"nope": 1}, {"choices": [{"message": {"content": 3}}]}])
    def test_malformed_body(self, body):
        client = HttpChatClient("http://llm", "m", transport=httpx.MockTransport(lambda r: httpx.Response(200, json=body)))
        with pytest.raises(TransportError, match="malformed"):
            client.chat("ciao")

    def test_non_json_body(self):
        client = HttpChatClient("http://llm", "m", transport=httpx.MockTransport(lambda r: httpx.Response(200, text="<html>")))
        with pytest.raises(TransportError, match="not JSON"):
            client.chat("ciao")

    def test_concurrency_cap(self):
        active, peak = [0], [0]
        lock = threading.Lock()

        def handler(request):
            with lock:
                active[0] += 1
                peak[0] = max(peak[0], active[0])
            time.sleep(0.02)
            with lock:
                active[0] -= 1
            return chat_response("ok")

        client = HttpChatClient("http://llm", "m", max_concurrency=2, transport=httpx.MockTransport(handler))
        threads = [threading.Thread(target=client.chat, args=("x",)) for _ in range(6)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert peak[0] <= 2
