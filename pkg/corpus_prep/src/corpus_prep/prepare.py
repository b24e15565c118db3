"""The pipeline: line-aligned plain text in, aligned CoNLL-U pair out.

Both sides are processed with their own parser backend.  A line the backend
cannot analyze is never dropped — dropping would silently break the
line alignment with the partner file — it is emitted with whitespace-split
tokens and the UNK dependency label on every token, logged, and counted in
the summary.  All validation that can fail happens before the first output
byte: backends resolve first (setup errors), then both inputs are read and
their line counts compared (data error), and only then are the two output
files written, each atomically.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

from .backends import ParseFailure, ParsedToken, resolve_backend
from .conllu import sentence_block, write_corpus
from .errors import DataError

log = logging.getLogger("corpus_prep")

UNK_DEPREL = "unk"


@dataclass
class PrepJob:
    """Everything one preparation run needs.

    Input files hold one sentence per line and are aligned by position;
    model identifiers are backend strings like ``rule:en`` or
    ``spacy:de_core_news_sm``.
    """

    src_lang: str
    tgt_lang: str
    src_in: str
    tgt_in: str
    src_out: str
    tgt_out: str
    model_src: str
    model_tgt: str


@dataclass
class PrepSummary:
    """Sentence and degradation counts for one run (per side)."""

    src_sentences: int
    tgt_sentences: int
    src_unparseable: int
    tgt_unparseable: int

    def __str__(self):
        return (f"src: {self.src_sentences} sentences "
                f"({self.src_unparseable} unparseable), "
                f"tgt: {self.tgt_sentences} sentences "
                f"({self.tgt_unparseable} unparseable)")


def read_lines(path) -> list:
    """Read one-sentence-per-line text; a trailing newline adds no line."""
    with open(path, encoding="utf-8-sig") as fh:
        return fh.read().splitlines()


def unk_fallback(line: str) -> list:
    """Degraded analysis: whitespace tokens, every label UNK, flat tree.

    An empty line still yields one placeholder token so the sentence keeps
    its slot in the alignment.
    """
    forms = line.split() or ["_"]
    return [ParsedToken(form, UNK_DEPREL, 0 if i == 0 else 1, "X")
            for i, form in enumerate(forms)]


def parse_side(backend, lines, path) -> tuple:
    """Parse every line into a sentence block; degrade failures in place."""
    blocks = []
    failures = 0
    for number, line in enumerate(lines, 1):
        try:
            tokens = backend.parse(line)
        except ParseFailure as exc:
            log.warning("%s line %d: %s; emitting UNK dependency labels",
                        path, number, exc)
            tokens = unk_fallback(line)
            failures += 1
        blocks.append(sentence_block(tokens, number))
    return blocks, failures


def prepare(job: PrepJob) -> PrepSummary:
    """Run the whole pipeline for one corpus pair."""
    src_backend = resolve_backend(job.model_src)
    tgt_backend = resolve_backend(job.model_tgt)
    src_lines = read_lines(job.src_in)
    tgt_lines = read_lines(job.tgt_in)
    if len(src_lines) != len(tgt_lines):
        raise DataError(
            f"input line counts differ: {job.src_in} has {len(src_lines)}, "
            f"{job.tgt_in} has {len(tgt_lines)}")
    src_blocks, src_failures = parse_side(src_backend, src_lines, job.src_in)
    tgt_blocks, tgt_failures = parse_side(tgt_backend, tgt_lines, job.tgt_in)
    write_corpus(job.src_out, src_blocks)
    write_corpus(job.tgt_out, tgt_blocks)
    return PrepSummary(len(src_blocks), len(tgt_blocks),
                       src_failures, tgt_failures)
