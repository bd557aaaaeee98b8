"""LLM-as-judge plumbing: prompt rendering and strict parsing of the three 1-10 scores."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Protocol

from ..generation import load_template

CRITERIA = ("completeness", "relevance", "clarity")
_PLACEHOLDER_RE = re.compile(r"\{(query|context|answer)\}")
_OBJECT_RE = re.compile(r"\{[^{}]*\}")


@dataclass(frozen=True)
class JudgeScore:
    completeness: int
    relevance: int
    clarity: int

    def __post_init__(self):
        for name in CRITERIA:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or not 1 <= value <= 10:
                raise ValueError(f"{name} must be an integer in [1, 10], got {value!r}")


class Judge(Protocol):
    def judge(self, prompt: str) -> str: ...


class ConstantJudge:
    def __init__(self, completeness: int = 7, relevance: int = 7, clarity: int = 7):
        self.reply = json.dumps({"completeness": completeness, "relevance": relevance, "clarity": clarity})

    def judge(self, prompt: str) -> str:
        return self.reply


class ChatJudge:
    """Adapts a chat client (anything with ``chat(prompt) -> str``) to the judge contract."""

    def __init__(self, client):
        self.client = client

    def judge(self, prompt: str) -> str:
        return self.client.chat(prompt)


def default_judge_template() -> str:
    return load_template(resources.files("entity_rag.data").joinpath("judge_template.txt"))


def build_judge_prompt(query: str, context: str, answer: str, template: str | None = None) -> str:
    values = {"query": query, "context": context, "answer": answer}
    return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], template or default_judge_template())


def parse_judge_output(text: str) -> JudgeScore | None:
    """Parse ``{"completeness", "relevance", "clarity"}``; None if absent or out of range.

    The whole reply is tried first, then the first flat JSON object inside it.
    """
    candidates = [text] + _OBJECT_RE.findall(text)
    for candidate in candidates:
        try:
            obj = json.loads(candidate)
        except (json.JSONDecodeError, TypeError):
            continue
        if not isinstance(obj, dict):
            continue
        try:
            return JudgeScore(**{name: obj[name] for name in CRITERIA})
        except (KeyError, ValueError, TypeError):
            return None
    return None
