"""CoNLL-U emission and structural validation.

The emitted dialect is the ten-column tab-separated format, one sentence per
blank-line-separated block, a ``# sent_id`` comment per sentence, UTF-8, LF
newlines.  Only FORM, HEAD and DEPREL carry content; the remaining columns
are ``_`` (LEMMA mirrors a lowercased FORM, UPOS a coarse tag, since both
are free).  Files are written atomically: a temporary file in the target
directory is renamed over the destination, so a crash never leaves a partial
corpus behind and reruns replace files in one step.
"""
from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass

_COLUMNS = 10


@dataclass
class Violation:
    """One structural problem, anchored to a 1-based line number."""

    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


def sentence_block(tokens, sent_id: int) -> str:
    """Render one parsed sentence as a CoNLL-U block (no trailing blank)."""
    rows = [f"# sent_id = {sent_id}"]
    for i, tok in enumerate(tokens, 1):
        rows.append("\t".join((
            str(i), tok.form, tok.form.lower(), tok.upos, "_", "_",
            str(tok.head), tok.deprel, "_", "_")))
    return "\n".join(rows)


def write_corpus(path, blocks) -> None:
    """Write sentence blocks to ``path`` atomically (temp file + rename)."""
    text = "\n\n".join(blocks)
    if text:
        text += "\n"
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".prep-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def validate_conllu(path) -> list:
    """Structurally check one CoNLL-U file; return a list of Violations.

    Checks: rows have exactly ten tab-separated columns, token ids are
    integers counting contiguously from 1 inside each block, sentences are
    separated by single blank lines, and every token row carries a real
    DEPREL.  CRLF line endings and a UTF-8 BOM are tolerated.  An unreadable
    path raises the usual OSError family.
    """
    violations = []
    with open(path, "rb") as fh:
        data = fh.read()
    raw_lines = data.split(b"\n")
    if raw_lines and raw_lines[-1] == b"":
        raw_lines.pop()  # terminating newline, not a line

    in_block = False
    expected_id = 1
    for lineno, raw in enumerate(raw_lines, 1):
        if raw.endswith(b"\r"):
            raw = raw[:-1]
        try:
            line = raw.decode("utf-8")
        except UnicodeDecodeError:
            violations.append(Violation(lineno, "not valid UTF-8"))
            continue
        if lineno == 1 and line.startswith("﻿"):
            line = line[1:]
        if not line.strip():
            if in_block:
                in_block = False
                expected_id = 1
            else:
                violations.append(Violation(
                    lineno, "blank line without a sentence block before it"))
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        bad_shape = len(cols) != _COLUMNS
        if bad_shape:
            violations.append(Violation(
                lineno,
                f"expected {_COLUMNS} tab-separated columns, got {len(cols)}"))
        tok_id = cols[0]
        if not tok_id.isdigit() or int(tok_id) < 1:
            if not bad_shape:
                violations.append(Violation(
                    lineno, f"token id {tok_id!r} is not a positive integer"))
            if not in_block:
                in_block = True
                expected_id = 1
            expected_id += 1  # consume one slot so later rows don't cascade
            continue
        got = int(tok_id)
        if not in_block:
            in_block = True
            expected_id = 1
        if got != expected_id:
            if got == 1 and expected_id > 1:
                violations.append(Violation(
                    lineno, "new sentence without a blank-line separator"))
            else:
                violations.append(Violation(
                    lineno,
                    f"token ids not contiguous: got {got}, expected {expected_id}"))
        expected_id = got + 1
        if bad_shape:
            continue
        if cols[7] in ("", "_"):
            violations.append(Violation(lineno, "token row has no DEPREL"))
    return violations
