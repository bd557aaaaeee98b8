from __future__ import annotations

import io
import json
import subprocess
import sys

import httpx
import pytest

from entity_rag.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def cfg_arg(toy_dir):
    return ["--config", str(toy_dir / "config.yaml")]


def test_ingest_link_index(capsys, toy_dir, cfg_arg, no_network):
    code, out, _ = run(capsys, "ingest", *cfg_arg)
    assert code == 0 and "chunks" in out
    corpus = json.loads((toy_dir / "out/corpus.json").read_text())
    assert len(corpus["chunks"]) >= 12
    fingerprint = corpus["metadata"]["config_fingerprint"]

    assert run(capsys, "link", *cfg_arg)[0] == 0
    linked = json.loads((toy_dir / "out/corpus_linked.json").read_text())
    assert linked["metadata"]["linked"] == "true"
    assert any(c["linked_entities"] for c in linked["chunks"])

    assert run(capsys, "index", *cfg_arg)[0] == 0
    manifest = json.loads((toy_dir / "out/index/manifest.json").read_text())
    assert manifest["config_fingerprint"] == fingerprint
    assert manifest["ids"] == [c["chunk_id"] for c in linked["chunks"]]
    assert no_network == []


def test_query_prints_ranked_ids(capsys, cfg_arg):
    code, out, _ = run(capsys, "query", *cfg_arg, "Chi era Smith, l'economista della mano invisibile?")
    rows = [line.split("\t") for line in out.splitlines() if not line.startswith("#")]
    assert code == 0 and len(rows) == 10
    assert [int(r[0]) for r in rows] == list(range(1, 11))
    assert rows[0][1] == "eco01-c001"
    scores = [float(r[2]) for r in rows]
    assert scores == sorted(scores, reverse=True)


def test_query_with_generation_abstains_out_of_domain(capsys, cfg_arg):
    code, out, _ = run(capsys, "query", *cfg_arg, "Qual è la capitale della Francia?", "--generate")
    assert code == 0 and "NO_RELEVANT_INFORMATION" in out and "# cited: []" in out


def test_evaluate_is_byte_identical(capsys, toy_dir, cfg_arg):
    report = toy_dir / "out/reports/method1_custom_rrf.json"
    assert run(capsys, "evaluate", *cfg_arg, "--method", "1")[0] == 0
    first = report.read_bytes()
    assert run(capsys, "evaluate", *cfg_arg, "--method", "1")[0] == 0
    assert report.read_bytes() == first
    assert json.loads(first)["config_fingerprint"]


@pytest.mark.parametrize("method", ["2", "3"])
def test_evaluate_other_methods(capsys, toy_dir, cfg_arg, method):
    code, out, _ = run(capsys, "evaluate", *cfg_arg, "--method", method, "--strategy", "weighted")
    assert code == 0
    report = json.loads((toy_dir / f"out/reports/method{method}_custom_weighted.json").read_text())
    assert report["n_queries"] == 12


def test_evaluate_squad(capsys, toy_dir, cfg_arg):
    code, out, _ = run(capsys, "evaluate", *cfg_arg, "--method", "1", "--benchmark", "squad")
    assert code == 0 and "EM=1.000" in out


def test_compare_table(capsys, toy_dir, cfg_arg):
    code, out, _ = run(capsys, "compare", *cfg_arg)
    assert code == 0
    labels = [line.split("  ")[0] for line in out.splitlines()[2:]]
    assert labels == ["Baseline", "Weighted-Score", "RRF", "RRF+Cross-Encoder"]
    saved = json.loads((toy_dir / "out/reports/compare_method1_custom.json").read_text())
    assert len(saved["reports"]) == 4


def test_seed_changes_fingerprint(capsys, toy_dir, cfg_arg):
    run(capsys, "ingest", *cfg_arg, "--seed", "5")
    fp5 = json.loads((toy_dir / "out/corpus.json").read_text())["metadata"]["config_fingerprint"]
    run(capsys, "ingest", *cfg_arg)
    fp0 = json.loads((toy_dir / "out/corpus.json").read_text())["metadata"]["config_fingerprint"]
    assert fp5 != fp0


def test_live_mode_requires_flag(capsys, cfg_arg, no_network):
    code, _, err = run(capsys, "link", *cfg_arg, "--set", "linker.mode=live")
    assert code == 2
    payload = json.loads(err.strip())
    assert payload["error"] == "ConfigError" and "--live" in payload["message"]
    assert len(err.strip().splitlines()) == 1


def test_live_500_is_a_transport_error(capsys, cfg_arg, monkeypatch):
    attempts = []

    def always_500(self, request):
        attempts.append(request.url.params["search"])
        return httpx.Response(500, request=request)

    monkeypatch.setattr(httpx.HTTPTransport, "handle_request", always_500)
    code, _, err = run(capsys, "link", *cfg_arg, "--live", "--set", "linker.mode=live",
                       "--set", "linker.max_retries=2", "--set", "linker.backoff_seconds=0",
                       "--set", "linker.requests_per_second=1000")
    assert code == 4
    assert json.loads(err)["error"] == "TransportError"
    assert len(attempts) == 3


def test_config_errors(capsys, tmp_path, cfg_arg):
    code, _, err = run(capsys, "query", "--config", str(tmp_path / "missing.yaml"), "x")
    assert code == 2 and json.loads(err)["exit_code"] == 2
    code, _, err = run(capsys, "query", *cfg_arg, "x", "--set", "rerank.beta=-1", "--set", "linker.alpha=3")
    assert code == 2 and len(json.loads(err)["errors"]) == 2


def test_data_error(capsys, toy_dir, cfg_arg):
    (toy_dir / "out").mkdir()
    (toy_dir / "out/corpus.json").write_text("{broken")
    code, _, err = run(capsys, "query", *cfg_arg, "x")
    assert code == 3 and json.loads(err)["error"] == "SchemaError"


def test_repl(capsys, cfg_arg, monkeypatch):
    monkeypatch.setattr(sys, "stdin", io.StringIO("Chi è Will Smith, l'attore dello spot?\n:q\nignored\n"))
    code, out, _ = run(capsys, "repl", *cfg_arg, "--top", "2")
    assert code == 0
    assert out.count("# query:") == 1 and "com02-c000" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "entity_rag", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "evaluate" in proc.stdout
