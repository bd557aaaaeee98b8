from __future__ import annotations

import pytest

from entity_rag.config import apply_overrides, config_from_dict, load_config, required_paths, validate_paths
from entity_rag.errors import ConfigError

LINKER = {"fixture_path": "f.json", "gazetteer_path": "g.txt"}


def test_defaults():
    cfg = config_from_dict({"linker": LINKER})
    assert cfg.linker.alpha == 0.9 and cfg.rerank.rrf_k == 60 and cfg.rerank.beta == 0.5
    assert cfg.embedding_dim == 1024 and cfg.embedder_seed == 0


def test_all_errors_are_reported_together():
    with pytest.raises(ConfigError) as info:
        config_from_dict({"linker": {"alpha": 2.0, "bogus": 1}, "rerank": {"strategy": "bm25"}, "extra": 1})
    errs = info.value.errors
    assert len(errs) >= 4
    text = "; ".join(errs)
    for needle in ("linker.alpha", "linker.bogus", "rerank.strategy", "extra"):
        assert needle in text


def test_overrides_parse_values():
    raw = apply_overrides({"rerank": {"beta": 0.5}, "linker": dict(LINKER)}, {"rerank.beta": "0.25", "linker.workers": "3", "seed": 4})
    cfg = config_from_dict(raw)
    assert cfg.rerank.beta == 0.25 and cfg.linker.workers == 3 and cfg.embedder_seed == 4


def test_fingerprint_tracks_settings(toy_dir):
    a = load_config(toy_dir / "config.yaml")
    b = load_config(toy_dir / "config.yaml")
    c = load_config(toy_dir / "config.yaml", {"rerank.beta": "0.3"})
    assert a.fingerprint == b.fingerprint != c.fingerprint
    assert len(a.fingerprint) == 16


def test_relative_paths_resolve_against_config(toy_dir):
    cfg = load_config(toy_dir / "config.yaml")
    assert cfg.path(cfg.linker.fixture_path) == toy_dir / "wikidata_fixture.json"


def test_missing_paths_listed(toy_dir):
    cfg = load_config(toy_dir / "config.yaml", {"linker.fixture_path": "nope.json", "linker.gazetteer_path": "nope.txt"})
    with pytest.raises(ConfigError) as info:
        validate_paths(cfg, required_paths(cfg, "link"))
    assert len([e for e in info.value.errors if "nope" in e]) == 2


def test_unreadable_config(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("linker: [unclosed")
    with pytest.raises(ConfigError):
        load_config(path)


def test_fixture_mode_needs_files():
    with pytest.raises(ConfigError, match="fixture_path"):
        config_from_dict({})
