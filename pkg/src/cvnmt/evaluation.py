"""Corpus-level BLEU, dependency-label accuracy, and length-bucketed reports."""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

_MAX_ORDER = 4


@dataclass
class BleuReport:
    bleu: float
    precisions: list
    brevity_penalty: float
    hyp_length: int
    ref_length: int

    def __str__(self):
        pstr = "/".join(f"{p:.4f}" for p in self.precisions)
        return (f"BLEU {self.bleu:.4f} (precisions {pstr}, bp {self.brevity_penalty:.4f}, "
                f"lengths {self.hyp_length}/{self.ref_length})")


def _ngrams(tokens, order):
    return Counter(tuple(tokens[i:i + order]) for i in range(len(tokens) - order + 1))


def bleu(hypotheses, references, smooth_add_one: bool = False) -> BleuReport:
    """Corpus BLEU over case-folded tokens: pooled clipped n-gram counts up to
    order 4, geometric mean, brevity penalty.  Unsmoothed unless asked --
    a zero pooled precision makes the score exactly 0.
    """
    if len(hypotheses) != len(references):
        raise ValueError(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    if not hypotheses:
        raise ValueError("empty corpus")
    matched = [0] * _MAX_ORDER
    possible = [0] * _MAX_ORDER
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp = [t.casefold() for t in hyp]
        ref = [t.casefold() for t in ref]
        hyp_len += len(hyp)
        ref_len += len(ref)
        for order in range(1, _MAX_ORDER + 1):
            hc = _ngrams(hyp, order)
            rc = _ngrams(ref, order)
            possible[order - 1] += max(len(hyp) - order + 1, 0)
            matched[order - 1] += sum(min(c, rc[g]) for g, c in hc.items())
    precisions = []
    for m, p in zip(matched, possible):
        if smooth_add_one:
            precisions.append((m + 1.0) / (p + 1.0))
        else:
            precisions.append(m / p if p > 0 else 0.0)
    if min(precisions) <= 0.0:
        geo = 0.0
    else:
        geo = math.exp(sum(math.log(p) for p in precisions) / _MAX_ORDER)
    if hyp_len == 0:
        bp = 0.0
    elif hyp_len > ref_len:
        bp = 1.0
    else:
        bp = math.exp(1.0 - ref_len / hyp_len)
    return BleuReport(bleu=bp * geo, precisions=precisions, brevity_penalty=bp,
                      hyp_length=hyp_len, ref_length=ref_len)


def dep_accuracy(hyp_deps, ref_deps) -> float:
    """Fraction of aligned positions (up to the shorter length) whose labels
    match; unmatched overhang counts against via the reference denominator."""
    if len(hyp_deps) != len(ref_deps):
        raise ValueError(f"{len(hyp_deps)} hypothesis rows vs {len(ref_deps)} references")
    correct = 0
    total = 0
    for hyp, ref in zip(hyp_deps, ref_deps):
        total += len(ref)
        correct += sum(1 for h, r in zip(hyp, ref) if h == r)
    return correct / total if total else 0.0


# ---------------------------------------------------------------------------
# corpus decoding
# ---------------------------------------------------------------------------

def decode_sentences(model, sentences, beam_size: int = 1, max_len=None):
    """Greedy (beam 1) or beam decode annotated source sentences; returns
    (token hypotheses, dependency-label hypotheses, traces).  When ``max_len``
    is None each sentence gets a cap of twice its source length plus five, so
    long inputs are not truncated at a fixed ceiling."""
    from .data import ids_to_tokens

    word_hyps, dep_hyps, traces = [], [], []
    for sent in sentences:
        src_words = [model.vocabs.src_words.id(t) for t in sent.tokens]
        src_deps = [model.vocabs.src_deps.id(d) for d in sent.deps]
        cap = 2 * len(src_words) + 5 if max_len is None else max_len
        if beam_size <= 1:
            hyp = model._greedy_hypothesis(src_words, src_deps, max_len=cap)
        else:
            hyp = model.beam_decode(src_words, src_deps, beam_size=beam_size, max_len=cap)
        word_hyps.append(ids_to_tokens(hyp.words, model.vocabs.tgt_words))
        dep_hyps.append(ids_to_tokens(hyp.deps, model.vocabs.tgt_deps))
        traces.append(hyp.trace)
    return word_hyps, dep_hyps, traces


def decode_corpus(model, examples, beam_size: int = 1, max_len=None):
    """Decode the source side of parallel examples; returns token and
    dependency-label hypothesis lists."""
    words, deps, _ = decode_sentences(model, [ex.source for ex in examples],
                                      beam_size, max_len)
    return words, deps


def evaluate_corpus(model, examples, beam_size: int = 1, max_len=None,
                    smooth_add_one: bool = False):
    """Decode and score a parallel corpus; returns (BleuReport, dep accuracy)."""
    word_hyps, dep_hyps = decode_corpus(model, examples, beam_size, max_len)
    word_refs = [ex.target.tokens for ex in examples]
    dep_refs = [ex.target.deps for ex in examples]
    return (bleu(word_hyps, word_refs, smooth_add_one=smooth_add_one),
            dep_accuracy(dep_hyps, dep_refs))


# ---------------------------------------------------------------------------
# length buckets
# ---------------------------------------------------------------------------

DEFAULT_BUCKET_EDGES = (10, 20, 30, 40, 50)


@dataclass
class LengthBucketReport:
    label: str
    lower: int            # exclusive
    upper: float          # inclusive; inf for the overflow bucket
    count: int = 0
    bleu: float = 0.0
    examples: list = field(default_factory=list, repr=False)


def bucket_by_length(examples, hypotheses, edges=DEFAULT_BUCKET_EDGES):
    """Group (example, hypothesis) pairs by source length into (prev, edge]
    intervals plus an overflow bucket, and score BLEU inside each."""
    edges = sorted(int(e) for e in edges)
    if not edges or edges[0] < 1:
        raise ValueError(f"bucket edges must be positive, got {edges}")
    if len(examples) != len(hypotheses):
        raise ValueError(f"{len(examples)} examples vs {len(hypotheses)} hypotheses")
    buckets = []
    prev = 0
    for e in edges:
        buckets.append(LengthBucketReport(label=f"{prev + 1}-{e}", lower=prev, upper=e))
        prev = e
    buckets.append(LengthBucketReport(label=f">{prev}", lower=prev, upper=math.inf))
    for ex, hyp in zip(examples, hypotheses):
        n = len(ex.source.tokens)
        for b in buckets:
            if b.lower < n <= b.upper:
                b.examples.append((ex, hyp))
                break
    for b in buckets:
        b.count = len(b.examples)
        if b.count:
            b.bleu = bleu([h for _, h in b.examples],
                          [ex.target.tokens for ex, _ in b.examples]).bleu
    return buckets


def report_json(bleu_report: BleuReport, dep_acc: float, buckets=None) -> str:
    payload = {
        "bleu": bleu_report.bleu,
        "precisions": bleu_report.precisions,
        "bp": bleu_report.brevity_penalty,
        "dep_accuracy": dep_acc,
    }
    if buckets is not None:
        payload["buckets"] = [
            {"edge": None if math.isinf(b.upper) else int(b.upper),
             "bleu": b.bleu, "count": b.count}
            for b in buckets
        ]
    return json.dumps(payload, indent=2, sort_keys=True)


def report_table(bleu_report: BleuReport, dep_acc: float, buckets=None) -> str:
    lines = [str(bleu_report), f"dependency label accuracy {dep_acc:.4f}"]
    if buckets:
        lines.append("")
        lines.append(f"{'bucket':>8}  {'count':>5}  {'BLEU':>8}")
        for b in buckets:
            lines.append(f"{b.label:>8}  {b.count:>5}  {b.bleu:>8.4f}")
    return "\n".join(lines)
