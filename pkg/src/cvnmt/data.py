"""Corpus handling: CoNLL-U parsing, vocabularies, id encoding, padded batches,
and the dual-plane embedding that puts word vectors on the real plane and
dependency-label vectors on the imaginary plane.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .ctensor import CTensor, ShapeError, _result

# reserved word ids
PAD, BOS, EOS, UNK = "<pad>", "<s>", "</s>", "<unk>"
WORD_RESERVED = (PAD, BOS, EOS, UNK)
PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3

# reserved dependency-label ids; NONE is the label carried by BOS/EOS
DEP_PAD, DEP_NONE, DEP_UNK = "<pad>", "<none>", "<unk>"
DEP_RESERVED = (DEP_PAD, DEP_NONE, DEP_UNK)
DEP_PAD_ID, DEP_NONE_ID, DEP_UNK_ID = 0, 1, 2

_CONLLU_COLUMNS = 10
_FORM_COL = 1
_DEPREL_COL = 7


class CorpusError(ValueError):
    """A corpus file is malformed or the two sides of a pair disagree."""


@dataclass
class AnnotatedSentence:
    """Surface tokens plus one dependency label per token."""

    tokens: list
    deps: list

    def __post_init__(self):
        if len(self.tokens) != len(self.deps):
            raise CorpusError(f"{len(self.tokens)} tokens but {len(self.deps)} dependency labels")
        if not self.tokens:
            raise CorpusError("empty sentence")

    def __len__(self):
        return len(self.tokens)


@dataclass
class ParallelExample:
    source: AnnotatedSentence
    target: AnnotatedSentence


def read_conllu(path) -> list:
    """Parse one CoNLL-U file into annotated sentences.

    Token rows must have 10 tab-separated columns; FORM and DEPREL are kept.
    Comment lines, multiword range rows (id like "1-2") and empty-node rows
    (id like "1.1") are skipped.  Blank lines separate sentences.
    """
    sentences = []
    tokens, deps = [], []

    def flush():
        if tokens:
            sentences.append(AnnotatedSentence(list(tokens), list(deps)))
            tokens.clear()
            deps.clear()

    with open(path, encoding="utf-8-sig") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                flush()
                continue
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != _CONLLU_COLUMNS:
                raise CorpusError(f"{path}:{lineno}: expected {_CONLLU_COLUMNS} tab-separated columns, got {len(cols)}")
            tok_id = cols[0]
            if "-" in tok_id or "." in tok_id:
                continue  # multiword range / empty node
            if not tok_id.isdigit():
                raise CorpusError(f"{path}:{lineno}: bad token id {tok_id!r}")
            tokens.append(cols[_FORM_COL])
            deps.append(cols[_DEPREL_COL])
    flush()
    return sentences


def load_conllu_parallel(source_path, target_path) -> list:
    """Load a sentence-aligned pair of CoNLL-U files."""
    src = read_conllu(source_path)
    tgt = read_conllu(target_path)
    if len(src) != len(tgt):
        raise CorpusError(
            f"sentence counts differ: {source_path} has {len(src)}, {target_path} has {len(tgt)}")
    return [ParallelExample(s, t) for s, t in zip(src, tgt)]


class _BaseVocab:
    """Fixed reserved prefix followed by corpus items in frequency order."""

    reserved: tuple = ()
    unk_id: int = 0

    def __init__(self, items=()):
        self._tokens = list(self.reserved) + [str(t) for t in items]
        self._index = {}
        for i, tok in enumerate(self._tokens):
            if tok in self._index:
                raise ValueError(f"duplicate vocabulary entry {tok!r}")
            self._index[tok] = i

    def __len__(self):
        return len(self._tokens)

    def __contains__(self, token):
        return token in self._index

    def id(self, token) -> int:
        return self._index.get(token, self.unk_id)

    def token(self, i: int) -> str:
        return self._tokens[i]

    def items(self):
        """Non-reserved entries in id order."""
        return list(self._tokens[len(self.reserved):])

    @classmethod
    def from_counts(cls, counts: Counter, min_count: int = 1, max_size=None):
        """Build from frequency counts: order by count desc, ties lexicographic."""
        kept = [(tok, c) for tok, c in counts.items()
                if c >= min_count and tok not in cls.reserved]
        kept.sort(key=lambda kv: (-kv[1], kv[0]))
        if max_size is not None:
            kept = kept[:max_size]
        return cls([tok for tok, _ in kept])

    def save(self, path):
        """One non-reserved token per line; line number is id minus the
        reserved offset."""
        with open(path, "w", encoding="utf-8") as fh:
            for tok in self.items():
                fh.write(tok + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            items = [line.rstrip("\n") for line in fh]
        while items and items[-1] == "":
            items.pop()
        return cls(items)


class Vocab(_BaseVocab):
    reserved = WORD_RESERVED
    unk_id = UNK_ID


class DepVocab(_BaseVocab):
    reserved = DEP_RESERVED
    unk_id = DEP_UNK_ID


@dataclass
class VocabBundle:
    src_words: Vocab
    src_deps: DepVocab
    tgt_words: Vocab
    tgt_deps: DepVocab


def build_vocabs(examples, min_count: int = 1, max_size=None) -> VocabBundle:
    """Count both sides of the corpus and build all four vocabularies."""
    cw, cd, tw, td = Counter(), Counter(), Counter(), Counter()
    for ex in examples:
        cw.update(ex.source.tokens)
        cd.update(ex.source.deps)
        tw.update(ex.target.tokens)
        td.update(ex.target.deps)
    return VocabBundle(
        Vocab.from_counts(cw, min_count, max_size),
        DepVocab.from_counts(cd, min_count, max_size),
        Vocab.from_counts(tw, min_count, max_size),
        DepVocab.from_counts(td, min_count, max_size),
    )


@dataclass
class EncodedExample:
    """Id form of one pair: raw source, BOS/EOS-wrapped target."""

    src_words: np.ndarray
    src_deps: np.ndarray
    tgt_words: np.ndarray
    tgt_deps: np.ndarray


def encode_example(ex: ParallelExample, vocabs: VocabBundle) -> EncodedExample:
    """Map tokens to ids; out-of-vocabulary items fall back to UNK.

    The target side is wrapped as BOS ... EOS with the NONE dependency label on
    the wrapper positions; the source side is used bare.
    """
    sw = np.array([vocabs.src_words.id(t) for t in ex.source.tokens], dtype=np.int64)
    sd = np.array([vocabs.src_deps.id(d) for d in ex.source.deps], dtype=np.int64)
    tw = np.array([BOS_ID] + [vocabs.tgt_words.id(t) for t in ex.target.tokens] + [EOS_ID], dtype=np.int64)
    td = np.array([DEP_NONE_ID] + [vocabs.tgt_deps.id(d) for d in ex.target.deps] + [DEP_NONE_ID], dtype=np.int64)
    return EncodedExample(sw, sd, tw, td)


def ids_to_tokens(ids, vocab) -> list:
    """Map ids back to surface tokens, dropping PAD/BOS/EOS wrappers."""
    skip = {PAD_ID, BOS_ID, EOS_ID} if isinstance(vocab, Vocab) else {DEP_PAD_ID}
    return [vocab.token(int(i)) for i in ids if int(i) not in skip]


@dataclass
class Batch:
    """Left-aligned padded id arrays plus boolean masks (True = real token)."""

    src_words: np.ndarray
    src_deps: np.ndarray
    src_mask: np.ndarray
    tgt_words: np.ndarray
    tgt_deps: np.ndarray
    tgt_mask: np.ndarray

    @property
    def size(self) -> int:
        return self.src_words.shape[0]


def batch_pad(encoded, batch_size: int) -> list:
    """Group encoded examples into order-preserving padded batches."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    encoded = list(encoded)
    batches = []
    for start in range(0, len(encoded), batch_size):
        chunk = encoded[start:start + batch_size]
        S = max(len(e.src_words) for e in chunk)
        T = max(len(e.tgt_words) for e in chunk)
        B = len(chunk)
        sw = np.full((B, S), PAD_ID, dtype=np.int64)
        sd = np.full((B, S), DEP_PAD_ID, dtype=np.int64)
        sm = np.zeros((B, S), dtype=bool)
        tw = np.full((B, T), PAD_ID, dtype=np.int64)
        td = np.full((B, T), DEP_PAD_ID, dtype=np.int64)
        tm = np.zeros((B, T), dtype=bool)
        for b, e in enumerate(chunk):
            ls, lt = len(e.src_words), len(e.tgt_words)
            sw[b, :ls] = e.src_words
            sd[b, :ls] = e.src_deps
            sm[b, :ls] = True
            tw[b, :lt] = e.tgt_words
            td[b, :lt] = e.tgt_deps
            tm[b, :lt] = True
        batches.append(Batch(sw, sd, sm, tw, td, tm))
    return batches


class SyntaxEmbedding:
    """Two real tables feeding one complex embedding.

    Row lookups put the word vector on the real plane and the dependency-label
    vector on the imaginary plane, so one surface word under two different
    labels shares its real part and differs in its imaginary part.  PAD rows
    are zero and are never updated.
    """

    def __init__(self, vocab_size: int, dep_size: int, dim: int,
                 rng: np.random.Generator, dtype=np.float64, init_scale: float = 0.08):
        wt = rng.uniform(-init_scale, init_scale, size=(vocab_size, dim)).astype(dtype)
        dt = rng.uniform(-init_scale, init_scale, size=(dep_size, dim)).astype(dtype)
        wt[PAD_ID] = 0.0
        dt[DEP_PAD_ID] = 0.0
        self.word_table = CTensor(wt, np.zeros_like(wt))
        self.word_table.real_only = True
        self.dep_table = CTensor(dt, np.zeros_like(dt))
        self.dep_table.real_only = True
        self.dim = dim

    def parameters(self):
        return [("word_table", self.word_table), ("dep_table", self.dep_table)]


def syntax_embed(word_ids, dep_ids, emb: SyntaxEmbedding) -> CTensor:
    """Look up a (length x dim) complex embedding matrix for an id sequence.

    Gradients scatter back into both tables; the PAD rows are excluded from
    updates so they stay exactly zero.
    """
    word_ids = np.asarray(word_ids, dtype=np.int64)
    dep_ids = np.asarray(dep_ids, dtype=np.int64)
    if word_ids.ndim != 1 or word_ids.shape != dep_ids.shape:
        raise ShapeError(f"id sequences must be equal-length vectors, got {word_ids.shape} and {dep_ids.shape}")
    wt, dt = emb.word_table, emb.dep_table
    if word_ids.size:
        if word_ids.min() < 0 or word_ids.max() >= wt.re.shape[0]:
            raise IndexError(f"word id out of range [0, {wt.re.shape[0]})")
        if dep_ids.min() < 0 or dep_ids.max() >= dt.re.shape[0]:
            raise IndexError(f"dependency id out of range [0, {dt.re.shape[0]})")
    re = wt.re[word_ids]
    im = dt.re[dep_ids]

    def make(ids):
        wn, dn = ids

        def bwd(gre, gim, accum):
            if wn is not None:
                d = np.zeros_like(wt.re)
                np.add.at(d, word_ids, gre)
                d[PAD_ID] = 0.0
                accum(wn, d, np.zeros_like(d))
            if dn is not None:
                d = np.zeros_like(dt.re)
                np.add.at(d, dep_ids, gim)
                d[DEP_PAD_ID] = 0.0
                accum(dn, d, np.zeros_like(d))

        return bwd

    return _result(re, im, (wt, dt), make)
