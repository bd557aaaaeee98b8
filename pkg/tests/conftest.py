from __future__ import annotations

import shutil
import socket
from importlib import resources
from pathlib import Path

import httpx
import pytest

from entity_rag import factory
from entity_rag.config import load_config
from entity_rag.embedding import HashEmbedder


def toy_source() -> Path:
    return Path(str(resources.files("entity_rag.data") / "toy"))


@pytest.fixture
def toy_dir(tmp_path) -> Path:
    """A private copy of the bundled toy project, so outputs land in tmp."""
    dest = tmp_path / "toy"
    shutil.copytree(toy_source(), dest, ignore=shutil.ignore_patterns("out"))
    return dest


@pytest.fixture
def toy_cfg(toy_dir):
    return load_config(toy_dir / "config.yaml")


@pytest.fixture(scope="session")
def toy_pipeline(tmp_path_factory):
    dest = tmp_path_factory.mktemp("toy_session") / "toy"
    shutil.copytree(toy_source(), dest, ignore=shutil.ignore_patterns("out"))
    cfg = load_config(dest / "config.yaml")
    return cfg, factory.build_pipeline(cfg)


@pytest.fixture
def no_network(monkeypatch):
    """Fail loudly on any attempt to open a socket or send a real HTTP request."""
    calls = []

    def refuse(*args, **kwargs):
        calls.append(args)
        raise AssertionError("network access attempted")

    monkeypatch.setattr(socket.socket, "connect", refuse)
    monkeypatch.setattr(socket, "create_connection", refuse)
    monkeypatch.setattr(httpx.HTTPTransport, "handle_request", refuse)
    return calls


@pytest.fixture
def embedder():
    return HashEmbedder(dim=64, seed=0)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def criterion(request):
    """Register an acceptance label; PASS or FAIL comes from the test outcome at session end."""
    entry = {"label": None}
    yield lambda label: entry.update(label=label)
    if entry["label"] is not None:
        request.config.stash[_ACCEPTANCE_KEY].append((request.node.nodeid, entry["label"]))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if not lines:
        return
    outcomes = {}
    for item_reports in terminalreporter.stats.values():
        for rep in item_reports:
            if getattr(rep, "when", None) == "call":
                outcomes[rep.nodeid] = rep.outcome
    terminalreporter.section("acceptance criteria")
    for nodeid, label in lines:
        status = "PASS" if outcomes.get(nodeid) == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {label}")
