from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources

_WORD_RE = re.compile(r"\w+", re.UNICODE)


def word_tokens(text: str) -> list[str]:
    """Lowercased word tokens; apostrophes and punctuation act as separators."""
    return _WORD_RE.findall(text.lower())


@lru_cache(maxsize=None)
def _bundled_list(name: str) -> frozenset[str]:
    raw = resources.files("entity_rag.data").joinpath(name).read_text(encoding="utf-8")
    return frozenset(
        line.strip().lower() for line in raw.splitlines() if line.strip() and not line.startswith("#")
    )


def stopwords() -> frozenset[str]:
    return _bundled_list("stopwords.txt")


def content_tokens(text: str) -> set[str]:
    stop = stopwords()
    return {tok for tok in word_tokens(text) if tok not in stop}


def read_word_list(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(
            line.strip().lower() for line in fh if line.strip() and not line.startswith("#")
        )


def default_abbreviations() -> frozenset[str]:
    return _bundled_list("abbreviations.txt")
