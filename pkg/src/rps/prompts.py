"""Prompt template registry and rendering.

Templates ship as text resources and are pinned byte-for-byte by golden
tests; code must never edit their wording. Placeholders are lowercase
``<name>`` markers; rendering is a single substitution pass, so bound
values are never re-scanned for markers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .errors import MissingBinding

_PLACEHOLDER = re.compile(r"<([a-z][a-z0-9_]*)>")

_TEMPLATE_FILES = {
    "AnswerGen": "answer_gen.txt",
    "QaGen": "qa_gen.txt",
    "Judge": "judge.txt",
    "CotpQuote": "cotp_quote.txt",
    "CoveBaseline": "cove_baseline.txt",
    "CoveVerify": "cove_verify.txt",
    "OpenQa": "open_qa.txt",
    "ReactChoice": "react_choice.txt",
}

TEMPLATE_NAMES = tuple(_TEMPLATE_FILES)


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str

    @property
    def placeholders(self) -> frozenset[str]:
        return frozenset(_PLACEHOLDER.findall(self.body))


@lru_cache(maxsize=None)
def get_template(name: str) -> PromptTemplate:
    if name not in _TEMPLATE_FILES:
        raise KeyError(f"unknown prompt template {name!r}; known: {TEMPLATE_NAMES}")
    path = resources.files("rps") / "resources" / "prompts" / _TEMPLATE_FILES[name]
    return PromptTemplate(name=name, body=path.read_text(encoding="utf-8"))


def render_prompt(template: PromptTemplate, bindings: dict[str, str]) -> str:
    """Substitute every placeholder; unbound placeholders are an error."""
    missing = template.placeholders - bindings.keys()
    if missing:
        raise MissingBinding(missing)
    return _PLACEHOLDER.sub(lambda m: bindings[m.group(1)], template.body)


def render(name: str, **bindings: str) -> str:
    return render_prompt(get_template(name), bindings)
