"""Tokenizer/parser backends behind model-identifier strings.

A model identifier is "<scheme>:<arg>".  Two schemes exist:

- ``rule:<lang>`` — a deterministic built-in tokenizer + heuristic labeler.
  It is not a real parser; it exists so the pipeline runs hermetically (tests,
  fixtures, smoke runs) and produces structurally well-formed trees with a
  plausible label inventory.  Output depends only on the input line.
- ``spacy:<model>`` — loads the named spaCy pipeline and uses its tokenizer
  and dependency parser.  spaCy itself is an optional dependency; a missing
  package or model is a :class:`SetupError` at resolve time.

A backend is anything with ``parse(line) -> list[ParsedToken]`` raising
:class:`ParseFailure` for a line it cannot handle.  Callers are expected to
degrade such lines rather than drop them.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import SetupError


@dataclass
class ParsedToken:
    """One token row worth of annotation: surface form plus its arc."""

    form: str
    deprel: str
    head: int  # 0 = root
    upos: str = "X"


class ParseFailure(Exception):
    """This line cannot be analyzed; the caller should degrade it."""


_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_WORD_RE = re.compile(r"\w")
_NUM_RE = re.compile(r"^\d+(?:[.,]\d+)*$")

_DET_WORDS = frozenset("a an the this that these those".split())
_CASE_WORDS = frozenset("of to in on at by for with from".split())


class RuleBackend:
    """Deterministic regex tokenizer with a flat heuristic tree.

    The first content word becomes the root; every other token attaches to
    it.  Labels come from shallow token shape: punctuation, numbers,
    determiners and adpositions get their own labels, remaining words
    alternate between two argument labels so the inventory is not degenerate.
    """

    def __init__(self, lang: str):
        self.lang = lang

    def parse(self, line: str):
        forms = _TOKEN_RE.findall(line)
        kinds = [self._kind(f) for f in forms]
        if not any(k not in ("punct",) for k in kinds) or not forms:
            raise ParseFailure("no word tokens in line")
        root = self._root_index(kinds)
        tokens = []
        arg_count = 0
        for i, (form, kind) in enumerate(zip(forms, kinds)):
            if i == root:
                tokens.append(ParsedToken(form, "root", 0, self._upos(kind)))
                continue
            if kind == "word":
                deprel = "obj" if arg_count % 2 == 0 else "nmod"
                arg_count += 1
            else:
                deprel = {"punct": "punct", "num": "nummod",
                          "det": "det", "case": "case"}[kind]
            tokens.append(ParsedToken(form, deprel, root + 1, self._upos(kind)))
        return tokens

    @staticmethod
    def _kind(form: str) -> str:
        if not _WORD_RE.search(form):
            return "punct"
        if _NUM_RE.match(form):
            return "num"
        low = form.lower()
        if low in _DET_WORDS:
            return "det"
        if low in _CASE_WORDS:
            return "case"
        return "word"

    @staticmethod
    def _root_index(kinds) -> int:
        for i, kind in enumerate(kinds):
            if kind == "word":
                return i
        for i, kind in enumerate(kinds):
            if kind != "punct":
                return i
        raise ParseFailure("no word tokens in line")

    @staticmethod
    def _upos(kind: str) -> str:
        return {"punct": "PUNCT", "num": "NUM", "det": "DET",
                "case": "ADP", "word": "NOUN"}[kind]


class SpacyBackend:
    """Adapter over an installed spaCy pipeline."""

    def __init__(self, model: str):
        try:
            import spacy  # deferred; optional dependency
        except ImportError as exc:
            raise SetupError(
                f"parser model 'spacy:{model}' needs the spacy package "
                f"(pip install corpus-prep[spacy]): {exc}") from exc
        try:
            self.nlp = spacy.load(model)
        except OSError as exc:
            raise SetupError(
                f"spaCy model {model!r} is not installed: {exc}") from exc

    def parse(self, line: str):
        doc = self.nlp(line)
        tokens = [t for t in doc if not t.is_space]
        if not tokens:
            raise ParseFailure("tokenizer produced no tokens")
        index = {t.i: n + 1 for n, t in enumerate(tokens)}
        out = []
        for t in tokens:
            head = 0 if t.head is t else index.get(t.head.i, 0)
            out.append(ParsedToken(t.text, (t.dep_ or "dep").lower(),
                                   head, t.pos_ or "X"))
        return out


def resolve_backend(model_id: str):
    """Turn a model-identifier string into a ready backend.

    Unknown schemes and unavailable models raise :class:`SetupError` here,
    before any corpus work starts.
    """
    scheme, sep, arg = model_id.partition(":")
    if not sep or not arg:
        raise SetupError(
            f"bad model identifier {model_id!r}: expected '<scheme>:<arg>', "
            f"e.g. 'rule:en' or 'spacy:en_core_web_sm'")
    if scheme == "rule":
        return RuleBackend(arg)
    if scheme == "spacy":
        return SpacyBackend(arg)
    raise SetupError(f"unknown parser scheme {scheme!r} in {model_id!r} "
                     f"(known: rule, spacy)")
