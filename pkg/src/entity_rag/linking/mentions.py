"""Mention extraction against a gazetteer of surface forms (longest match wins)."""

from __future__ import annotations

import re
from collections.abc import Iterable
from typing import Protocol

from ..corpus import split_sentences
from ..entities import EntityMention


class MentionProvider(Protocol):
    def extract_mentions(self, text: str, single_sentence: bool = False) -> list[EntityMention]: ...


class Gazetteer:
    """Matches known surface forms on word boundaries, sentence by sentence.

    Alternatives are tried longest first, so with ``{"Smith", "Adam Smith"}``
    the text "Adam Smith" yields one mention. Matching is case-insensitive
    unless ``case_sensitive`` is set; the mention surface keeps the casing
    found in the text.
    """

    def __init__(self, surfaces: Iterable[str], case_sensitive: bool = False, abbreviations=None):
        self.surfaces = sorted({s.strip() for s in surfaces if s.strip()}, key=lambda s: (-len(s), s))
        self.case_sensitive = case_sensitive
        self.abbreviations = abbreviations
        if self.surfaces:
            alternation = "|".join(re.escape(s) for s in self.surfaces)
            flags = 0 if case_sensitive else re.IGNORECASE
            self._pattern = re.compile(rf"(?<!\w)(?:{alternation})(?!\w)", flags)
        else:
            self._pattern = None

    @classmethod
    def load(cls, path, case_sensitive: bool = False) -> Gazetteer:
        """Read newline-delimited surfaces. A ``|Q123`` suffix is a fixture hint and is dropped."""
        surfaces = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                surfaces.append(line.split("|", 1)[0])
        return cls(surfaces, case_sensitive)

    def extract_mentions(self, text: str, single_sentence: bool = False) -> list[EntityMention]:
        if self._pattern is None or not text.strip():
            return []
        if single_sentence:
            sentences = [(text, (0, len(text)))]
        else:
            sentences = split_sentences(text, self.abbreviations)
        mentions = []
        for sentence, (offset, _) in sentences:
            for m in self._pattern.finditer(sentence):
                start, end = offset + m.start(), offset + m.end()
                mentions.append(EntityMention(text[start:end], sentence, (start, end)))
        return mentions
