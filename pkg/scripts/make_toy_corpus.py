#!/usr/bin/env python3
"""Regenerate the checked-in toy corpora under tests/fixtures/.

Deterministic: rerunning always writes identical bytes.  The toy language maps
each source word to its mirror spelling and reverses the word order, so a
model must learn a bijective lexicon plus a reordering — enough structure for
attention to matter while staying overfittable in seconds.
"""
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from cvnmt.rng import named_rng  # noqa: E402

WORDS = ["ba", "ko", "ra", "mi", "tu", "ne", "so", "li", "da", "fu", "ge", "po"]
DEPS = ["nsubj", "obj", "det", "root"]

FIXDIR = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures")


def mirror(w):
    return w[::-1]


def conllu_block(sent_id, tokens, deps):
    lines = [f"# sent_id = {sent_id}"]
    for i, (form, dep) in enumerate(zip(tokens, deps), start=1):
        head = 0 if dep == "root" else max(i - 1, 1)
        lines.append("\t".join([str(i), form, form, "X", "_", "_", str(head), dep, "_", "_"]))
    return "\n".join(lines) + "\n\n"


def write(path, blocks):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(blocks))
    print(f"wrote {path} ({len(blocks)} sentences)")


def make_toy20():
    rng = named_rng(20240818, "toy20")
    src_blocks, tgt_blocks = [], []
    for n in range(20):
        length = int(rng.integers(4, 7))
        idx = rng.integers(0, len(WORDS), size=length)
        tokens = [WORDS[int(i)] for i in idx]
        deps = [DEPS[int(d)] for d in rng.integers(0, 3, size=length - 1)] + ["root"]
        tgt_tokens = [mirror(t) for t in reversed(tokens)]
        tgt_deps = list(reversed(deps))
        src_blocks.append(conllu_block(n + 1, tokens, deps))
        tgt_blocks.append(conllu_block(n + 1, tgt_tokens, tgt_deps))
    write(os.path.join(FIXDIR, "toy20.src.conllu"), src_blocks)
    write(os.path.join(FIXDIR, "toy20.tgt.conllu"), tgt_blocks)


def make_ambig4():
    # two word sequences, each under two dependency patterns; the translation
    # depends on the pattern, so only the label (imaginary) channel separates them
    duos = [
        (["ba", "ko", "ra", "mi"],
         (["nsubj", "obj", "det", "root"], ["ab", "ok", "ar", "im"]),
         (["det", "nsubj", "obj", "root"], ["im", "ar", "ok", "ab"])),
        (["tu", "ne", "so", "li"],
         (["nsubj", "obj", "det", "root"], ["ut", "en", "os", "il"]),
         (["det", "nsubj", "obj", "root"], ["il", "os", "en", "ut"])),
    ]
    src_blocks, tgt_blocks = [], []
    sid = 1
    for words, (deps_a, tgt_a), (deps_b, tgt_b) in duos:
        for deps, tgt in ((deps_a, tgt_a), (deps_b, tgt_b)):
            src_blocks.append(conllu_block(sid, words, deps))
            tgt_blocks.append(conllu_block(sid, tgt, list(reversed(deps))))
            sid += 1
    write(os.path.join(FIXDIR, "ambig4.src.conllu"), src_blocks)
    write(os.path.join(FIXDIR, "ambig4.tgt.conllu"), tgt_blocks)


def make_tiny3():
    pairs = [
        (["ba", "ko", "ra"], ["nsubj", "obj", "root"]),
        (["mi", "tu"], ["det", "root"]),
        (["ne", "so", "li", "da"], ["nsubj", "det", "obj", "root"]),
    ]
    src_blocks, tgt_blocks = [], []
    for i, (tokens, deps) in enumerate(pairs, start=1):
        src_blocks.append(conllu_block(i, tokens, deps))
        tgt_blocks.append(conllu_block(i, [mirror(t) for t in reversed(tokens)],
                                       list(reversed(deps))))
    write(os.path.join(FIXDIR, "tiny3.src.conllu"), src_blocks)
    write(os.path.join(FIXDIR, "tiny3.tgt.conllu"), tgt_blocks)


def make_special_rows():
    # multiword range row, empty-node row, comments, and a BOM: all must be
    # tolerated; the logical sentences here are ("ba","ko") and ("mi",)
    text = (
        "﻿# newdoc\n"
        "# sent_id = 1\n"
        "1-2\tbako\t_\t_\t_\t_\t_\t_\t_\t_\n"
        "1\tba\tba\tX\t_\t_\t0\troot\t_\t_\n"
        "2\tko\tko\tX\t_\t_\t1\tobj\t_\t_\n"
        "2.1\tghost\t_\t_\t_\t_\t_\t_\t_\t_\n"
        "\n"
        "1\tmi\tmi\tX\t_\t_\t0\troot\t_\t_\n"
        "\n"
    )
    path = os.path.join(FIXDIR, "special_rows.conllu")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    print(f"wrote {path}")


def make_bad_columns():
    text = (
        "1\tba\tba\tX\t_\t_\t0\troot\t_\t_\n"
        "2\tko\tko\tX\t_\t0\tobj\t_\t_\n"  # 9 columns
        "\n"
    )
    path = os.path.join(FIXDIR, "bad_columns.conllu")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    print(f"wrote {path}")


if __name__ == "__main__":
    os.makedirs(FIXDIR, exist_ok=True)
    make_toy20()
    make_ambig4()
    make_tiny3()
    make_special_rows()
    make_bad_columns()
