"""Pipeline configuration: one YAML (or JSON) file plus dotted-key overrides.

Relative paths resolve against the directory of the config file. Validation
collects every problem before raising. The fingerprint is a hash of the
canonicalised settings and is stamped on every artifact the CLI writes.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError


@dataclass
class ChunkingSettings:
    min_tokens: int = 20
    max_tokens: int = 300
    abbreviations_path: str | None = None


@dataclass
class EmbedderSettings:
    kind: str = "test"
    path: str | None = None
    seed: int | None = None


@dataclass
class LinkerSettings:
    alpha: float = 0.9
    max_candidates: int = 7
    language: str = "it"
    mode: str = "fixture"
    fixture_path: str | None = None
    gazetteer_path: str | None = None
    case_sensitive: bool = False
    endpoint: str = "https://www.wikidata.org/w/api.php"
    cache_dir: str | None = "wikidata_cache"
    requests_per_second: float = 1.0
    max_retries: int = 3
    backoff_seconds: float = 0.5
    workers: int = 1


@dataclass
class RerankSettings:
    strategy: str = "rrf"
    beta: float = 0.5
    rrf_k: int = 60
    pool_size: int | None = None
    cross_top_n: int = 20
    cross_scorer: str = "token_overlap"
    cross_scorer_url: str | None = None
    max_retries: int = 3
    backoff_seconds: float = 0.5


@dataclass
class GeneratorSettings:
    kind: str = "extractive"
    url: str | None = None
    model: str = "gpt-4o"
    api_key_env: str = "GENERATOR_API_KEY"
    template_path: str | None = None
    audit_log: str = "generator_audit.jsonl"
    max_concurrency: int = 4
    max_retries: int = 3
    backoff_seconds: float = 0.5


@dataclass
class JudgeSettings:
    kind: str = "constant"
    scores: list[int] = field(default_factory=lambda: [7, 7, 7])
    url: str | None = None
    model: str = "gpt-4o"
    api_key_env: str = "JUDGE_API_KEY"
    template_path: str | None = None
    context_k: int = 3


@dataclass
class BenchmarkSettings:
    custom: str | None = None
    squad: str | None = None


@dataclass
class PipelineConfig:
    transcripts_dir: str | None = None
    corpus_path: str = "out/corpus.json"
    linked_corpus_path: str = "out/corpus_linked.json"
    output_dir: str = "out"
    seed: int = 0
    embedding_dim: int = 1024
    chunking: ChunkingSettings = field(default_factory=ChunkingSettings)
    embedder: EmbedderSettings = field(default_factory=EmbedderSettings)
    linker: LinkerSettings = field(default_factory=LinkerSettings)
    rerank: RerankSettings = field(default_factory=RerankSettings)
    generator: GeneratorSettings = field(default_factory=GeneratorSettings)
    judge: JudgeSettings = field(default_factory=JudgeSettings)
    benchmarks: BenchmarkSettings = field(default_factory=BenchmarkSettings)
    base_dir: Path = field(default=Path("."), compare=False, repr=False)

    def path(self, value: str | None) -> Path | None:
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def out(self) -> Path:
        return self.path(self.output_dir)

    @property
    def embedder_seed(self) -> int:
        return self.seed if self.embedder.seed is None else self.embedder.seed

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        return d

    @property
    def fingerprint(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


_SECTIONS = {
    "chunking": ChunkingSettings,
    "embedder": EmbedderSettings,
    "linker": LinkerSettings,
    "rerank": RerankSettings,
    "generator": GeneratorSettings,
    "judge": JudgeSettings,
    "benchmarks": BenchmarkSettings,
}


def _parse_scalar(text: str) -> Any:
    return yaml.safe_load(text)


def apply_overrides(raw: dict, overrides: dict[str, Any]) -> dict:
    """Apply ``{"rerank.beta": 0.3}``-style overrides to a raw config mapping."""
    raw = json.loads(json.dumps(raw))
    for dotted, value in overrides.items():
        if isinstance(value, str):
            value = _parse_scalar(value)
        node = raw
        *parents, leaf = dotted.split(".")
        for part in parents:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot override {dotted!r}: {part!r} is not a section")
        node[leaf] = value
    return raw


def _construct(cls, data: Any, prefix: str, errors: list[str]):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        errors.append(f"{prefix or 'config'}: expected a mapping")
        return cls()
    names = {f.name for f in dataclasses.fields(cls)} - {"base_dir"}
    for key in sorted(set(data) - names):
        errors.append(f"{prefix}{key}: unknown setting")
    kwargs = {}
    for key in names & set(data):
        if cls is PipelineConfig and key in _SECTIONS:
            kwargs[key] = _construct(_SECTIONS[key], data[key], f"{key}.", errors)
        else:
            kwargs[key] = data[key]
    return cls(**kwargs)


def config_from_dict(raw: dict, base_dir=".") -> PipelineConfig:
    errors: list[str] = []
    cfg = _construct(PipelineConfig, raw, "", errors)
    cfg.base_dir = Path(base_dir)
    errors.extend(_range_errors(cfg))
    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(path=None, overrides: dict[str, Any] | None = None) -> PipelineConfig:
    if path is None:
        return config_from_dict(apply_overrides({}, overrides or {}))
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return config_from_dict(apply_overrides(raw, overrides or {}), path.parent)


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _range_errors(cfg: PipelineConfig) -> list[str]:
    errs = []

    def check(ok: bool, msg: str):
        if not ok:
            errs.append(msg)

    check(_is_int(cfg.seed), "seed: must be an integer")
    check(_is_int(cfg.embedding_dim) and cfg.embedding_dim >= 1, "embedding_dim: must be a positive integer")
    c = cfg.chunking
    check(_is_int(c.min_tokens) and c.min_tokens >= 0, "chunking.min_tokens: must be a non-negative integer")
    check(_is_int(c.max_tokens) and c.max_tokens >= 1, "chunking.max_tokens: must be a positive integer")
    if _is_int(c.min_tokens) and _is_int(c.max_tokens):
        check(c.min_tokens <= c.max_tokens, "chunking: min_tokens must not exceed max_tokens")
    e = cfg.embedder
    check(e.kind in ("test", "file"), f"embedder.kind: must be 'test' or 'file', got {e.kind!r}")
    check(e.kind != "file" or bool(e.path), "embedder.path: required when embedder.kind is 'file'")
    check(e.seed is None or _is_int(e.seed), "embedder.seed: must be an integer")
    lk = cfg.linker
    check(_is_number(lk.alpha) and 0 <= lk.alpha <= 1, "linker.alpha: must be in [0, 1]")
    check(_is_int(lk.max_candidates) and lk.max_candidates >= 1, "linker.max_candidates: must be >= 1")
    check(lk.mode in ("live", "fixture"), f"linker.mode: must be 'live' or 'fixture', got {lk.mode!r}")
    check(lk.mode != "fixture" or bool(lk.fixture_path), "linker.fixture_path: required in fixture mode")
    check(bool(lk.gazetteer_path), "linker.gazetteer_path: required")
    check(_is_number(lk.requests_per_second) and lk.requests_per_second > 0,
          "linker.requests_per_second: must be > 0")
    check(_is_int(lk.max_retries) and lk.max_retries >= 0, "linker.max_retries: must be >= 0")
    check(_is_int(lk.workers) and lk.workers >= 1, "linker.workers: must be >= 1")
    r = cfg.rerank
    check(r.strategy in ("dense", "weighted", "rrf", "rrf_cross"),
          f"rerank.strategy: must be one of dense, weighted, rrf, rrf_cross; got {r.strategy!r}")
    check(_is_number(r.beta) and r.beta >= 0, "rerank.beta: must be >= 0")
    check(_is_int(r.rrf_k) and r.rrf_k >= 0, "rerank.rrf_k: must be a non-negative integer")
    check(r.pool_size is None or (_is_int(r.pool_size) and r.pool_size >= 1), "rerank.pool_size: must be >= 1")
    check(_is_int(r.cross_top_n) and r.cross_top_n >= 1, "rerank.cross_top_n: must be >= 1")
    pool = r.pool_size if r.pool_size is not None else 50
    if _is_int(r.cross_top_n) and _is_int(pool):
        check(r.cross_top_n <= pool, "rerank.cross_top_n: must not exceed the rrf_cross pool size")
    check(r.cross_scorer in ("order_preserving", "token_overlap", "http"),
          f"rerank.cross_scorer: unknown kind {r.cross_scorer!r}")
    check(r.cross_scorer != "http" or bool(r.cross_scorer_url), "rerank.cross_scorer_url: required for http scorer")
    g = cfg.generator
    check(g.kind in ("extractive", "http"), f"generator.kind: must be 'extractive' or 'http', got {g.kind!r}")
    check(g.kind != "http" or bool(g.url), "generator.url: required for http generator")
    check(_is_int(g.max_concurrency) and g.max_concurrency >= 1, "generator.max_concurrency: must be >= 1")
    j = cfg.judge
    check(j.kind in ("constant", "http"), f"judge.kind: must be 'constant' or 'http', got {j.kind!r}")
    check(j.kind != "http" or bool(j.url), "judge.url: required for http judge")
    check(isinstance(j.scores, list) and len(j.scores) == 3 and all(_is_int(s) and 1 <= s <= 10 for s in j.scores),
          "judge.scores: must be three integers in [1, 10]")
    check(_is_int(j.context_k) and j.context_k >= 1, "judge.context_k: must be >= 1")
    return errs


# settings that name files read by each command
_ALWAYS_IF_SET = ("chunking.abbreviations_path", "generator.template_path", "judge.template_path")
_LINKING = ("linker.gazetteer_path", "linker.fixture_path")


def required_paths(cfg: PipelineConfig, command: str) -> list[str]:
    keys = list(_ALWAYS_IF_SET)
    if cfg.embedder.kind == "file" and command in ("index", "query", "evaluate", "compare", "repl"):
        keys.append("embedder.path")
    if command == "ingest":
        keys.append("transcripts_dir")
    if command in ("link", "query", "evaluate", "compare", "repl", "index"):
        keys.extend(_LINKING)
    return keys


def _get(cfg: PipelineConfig, dotted: str):
    node: Any = cfg
    for part in dotted.split("."):
        node = getattr(node, part)
    return node


def validate_paths(cfg: PipelineConfig, keys: list[str], required: tuple[str, ...] = ()) -> None:
    """Check that every referenced input exists; raise one ConfigError listing all misses."""
    errors = []
    for key in keys:
        value = _get(cfg, key)
        if value is None:
            if key in required or key == "transcripts_dir" or key == "corpus_path":
                errors.append(f"{key}: required for this command")
            continue
        if key == "linker.fixture_path" and cfg.linker.mode != "fixture":
            continue
        if not cfg.path(value).exists():
            errors.append(f"{key}: path does not exist: {cfg.path(value)}")
    if errors:
        raise ConfigError(errors)
