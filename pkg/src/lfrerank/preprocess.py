"""Turn candidate logical forms into text before similarity scoring.

Three methods, in increasing distance from the raw form:

  raw           the serialized logical form, untouched
  entity_names  entity tokens replaced by natural-language phrases; tokens
                starting with "_" lose the leading underscore and interior
                underscores become spaces
  templated     full expansion to a canonical utterance via a template
                grammar; candidates not covered by the grammar are excluded
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional

from .data import BeamCandidate
from .lf import LfTree, serialize

METHOD_RAW = "raw"
METHOD_ENTITY = "entity_names"
METHOD_TEMPLATED = "templated"
METHODS = (METHOD_RAW, METHOD_ENTITY, METHOD_TEMPLATED)

EXCLUDED_TEXT = "EXCLUDED"

_STRUCTURAL = {"(", ")", ","}
_SLOT_RE = re.compile(r"\$(\d+)")


class MissingResourceError(Exception):
    """A processing method was invoked without the resource it needs."""


class GrammarError(ValueError):
    """A template rule is malformed; detected at load time."""


class EntityLexicon:
    """Map from logical-form tokens to natural-language phrases."""

    def __init__(self, entries: dict[str, str]):
        for token, phrase in entries.items():
            if not phrase or not phrase.strip():
                raise ValueError(f"lexicon entry {token!r} has an empty phrase")
            if phrase != phrase.lower():
                raise ValueError(f"lexicon phrase for {token!r} must be lowercase: {phrase!r}")
        self._entries = dict(entries)

    @classmethod
    def empty(cls) -> "EntityLexicon":
        return cls({})

    @classmethod
    def from_tsv(cls, path) -> "EntityLexicon":
        entries: dict[str, str] = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                if "\t" not in line:
                    raise ValueError(f"{path}:{lineno}: expected token<TAB>phrase")
                token, phrase = line.split("\t", 1)
                if token in entries:
                    raise ValueError(f"{path}:{lineno}: duplicate lexicon token {token!r}")
                entries[token] = phrase
        return cls(entries)

    def get(self, token: str) -> Optional[str]:
        return self._entries.get(token)

    def __contains__(self, token: str) -> bool:
        return token in self._entries

    def __len__(self) -> int:
        return len(self._entries)


def process_raw(lf: LfTree) -> str:
    """The serialized logical form, no processing."""
    return serialize(lf)


def naturalize_text(text: str, lexicon: EntityLexicon) -> str:
    """Apply entity naming to a whitespace-tokenized surface string.

    Lexicon lookup wins over the underscore rule; structural punctuation is
    kept; unmatched tokens pass through unchanged.
    """
    out = []
    for token in text.split():
        if token in _STRUCTURAL:
            out.append(token)
            continue
        phrase = lexicon.get(token)
        if phrase is not None:
            out.append(phrase)
        elif token.startswith("_"):
            out.append(token[1:].replace("_", " "))
        else:
            out.append(token)
    return " ".join(out)


def naturalize(lf: LfTree, lexicon: EntityLexicon) -> str:
    return naturalize_text(serialize(lf), lexicon)


@dataclass(frozen=True)
class TemplateRule:
    functor: str
    arity: int
    template: str


class TemplateGrammar:
    """Ordered rewrite rules from functor patterns to utterance templates.

    One rule per line, ``pattern => template``. The pattern is a functor name
    (possibly multi-word) with slots $1..$k, or a bare name for leaves. The
    first matching rule wins, in file order.
    """

    def __init__(self, rules: list[TemplateRule]):
        self.rules = list(rules)

    @classmethod
    def from_lines(cls, lines: Iterable[str], source: str = "<grammar>") -> "TemplateGrammar":
        rules = []
        for lineno, line in enumerate(lines, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rules.append(_parse_rule(line, f"{source}:{lineno}"))
        return cls(rules)

    @classmethod
    def from_file(cls, path) -> "TemplateGrammar":
        with open(path, encoding="utf-8") as f:
            return cls.from_lines(f, str(path))

    def match(self, functor: str, arity: int) -> Optional[TemplateRule]:
        for rule in self.rules:
            if rule.functor == functor and rule.arity == arity:
                return rule
        return None

    def __len__(self) -> int:
        return len(self.rules)


def _parse_rule(line: str, where: str) -> TemplateRule:
    if "=>" not in line:
        raise GrammarError(f"{where}: missing '=>' in rule: {line!r}")
    pattern, template = line.split("=>", 1)
    pattern = pattern.strip()
    template = template.strip()
    if not template:
        raise GrammarError(f"{where}: empty template")
    if "(" in pattern:
        if not pattern.endswith(")"):
            raise GrammarError(f"{where}: pattern must end with ')': {pattern!r}")
        name, inner = pattern[:-1].split("(", 1)
        functor = re.sub(r"\s+", " ", name.strip())
        slots = [s.strip() for s in inner.split(",")]
        expected = [f"${i}" for i in range(1, len(slots) + 1)]
        if slots != expected:
            raise GrammarError(f"{where}: pattern slots must be {expected}, got {slots}")
        arity = len(slots)
    else:
        functor = re.sub(r"\s+", " ", pattern)
        arity = 0
    if not functor:
        raise GrammarError(f"{where}: empty functor in pattern")
    for m in _SLOT_RE.finditer(template):
        k = int(m.group(1))
        if not 1 <= k <= arity:
            raise GrammarError(f"{where}: template references unbound slot ${k}")
    return TemplateRule(functor, arity, template)


def expand_template(lf: LfTree, grammar: TemplateGrammar) -> Optional[str]:
    """Expand a tree to a canonical utterance; None when a subtree is uncovered."""
    rule = grammar.match(lf.label, len(lf.children))
    if rule is None:
        return None
    parts = []
    for child in lf.children:
        sub = expand_template(child, grammar)
        if sub is None:
            return None
        parts.append(sub)
    text = _SLOT_RE.sub(lambda m: parts[int(m.group(1)) - 1], rule.template)
    return re.sub(r"\s+", " ", text).strip()


def process_lf(
    lf: LfTree,
    method: str,
    lexicon: Optional[EntityLexicon] = None,
    grammar: Optional[TemplateGrammar] = None,
) -> Optional[str]:
    """Process one logical form; None means excluded (templated method only)."""
    if method == METHOD_RAW:
        return process_raw(lf)
    if method == METHOD_ENTITY:
        if lexicon is None:
            raise MissingResourceError("entity_names processing requires a lexicon")
        return naturalize(lf, lexicon)
    if method == METHOD_TEMPLATED:
        if grammar is None:
            raise MissingResourceError("templated processing requires a template grammar")
        return expand_template(lf, grammar)
    raise ValueError(f"unknown processing method {method!r}; expected one of {METHODS}")


@dataclass(frozen=True)
class ProcessedCandidate:
    candidate: BeamCandidate
    method: str
    text: Optional[str]

    @property
    def excluded(self) -> bool:
        return self.text is None


def process(
    candidates: list[BeamCandidate],
    method: str,
    lexicon: Optional[EntityLexicon] = None,
    grammar: Optional[TemplateGrammar] = None,
) -> list[ProcessedCandidate]:
    """Process a beam, preserving order and count."""
    return [
        ProcessedCandidate(c, method, process_lf(c.lf, method, lexicon, grammar))
        for c in candidates
    ]
