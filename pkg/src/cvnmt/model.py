"""Complex encoder-decoder with attention.

The encoder runs the complex tanh recurrence over dual-plane embeddings
(words real, dependency labels imaginary).  The decoder attends over encoder
states with one of two score functions:

  variant "B": additive   score = v . Ctanh(Wq s_prev + Wk h_j)
  variant "L": bilinear   score = s_prev . (Wa h_j)

both using the plain complex dot product (no conjugation).  Attention weights
come from the split softmax; the context is the complex weighted sum of
encoder states.  Two magnitude-readout heads produce word and dependency-label
log distributions at every decoder step.

``real_mode`` is the real-baseline switch: it drops the imaginary part of the
attention weights right after the softmax.  Combined with zeroed imaginary
parameter blocks and zeroed dependency tables (``zero_imaginary_copy``) the
whole network collapses exactly onto a classic real-valued attention seq2seq.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ctensor import (CTensor, ShapeError, backward, cadd, cconcat, cdot, cmatmul,
                      crow, cstack, ctranspose, drop_imag, log_softmax, modulus)
from .data import (BOS_ID, DEP_NONE_ID, EOS_ID, SyntaxEmbedding, VocabBundle,
                   syntax_embed)
from .layers import CLinear, CRNNCell, crnn_step, csoftmax, ctanh, glorot_limit
from .rng import named_rng

VARIANTS = ("B", "L")


class UsageError(ValueError):
    """The model API was called with arguments that cannot be serviced."""


class AdditiveAttention:
    """Tanh-perceptron score over a learned query/key projection."""

    kind = "B"

    def __init__(self, hidden_dim: int, rng: np.random.Generator, dtype=np.float64):
        self.query = CLinear(hidden_dim, hidden_dim, rng, dtype)
        self.key = CLinear(hidden_dim, hidden_dim, rng, dtype)
        limit = glorot_limit(hidden_dim, 1)
        self.v = CTensor(rng.uniform(-limit, limit, hidden_dim).astype(dtype),
                         rng.uniform(-limit, limit, hidden_dim).astype(dtype))

    def parameters(self):
        out = [(f"query.{n}", p) for n, p in self.query.parameters()]
        out += [(f"key.{n}", p) for n, p in self.key.parameters()]
        out.append(("v", self.v))
        return out

    def score_one(self, s_prev: CTensor, h_j: CTensor) -> CTensor:
        return cdot(self.v, ctanh(cadd(self.query(s_prev), self.key(h_j))))

    def project_keys(self, states_matrix: CTensor) -> CTensor:
        return self.key(states_matrix)

    def scores(self, s_prev: CTensor, keys: CTensor) -> CTensor:
        q = self.query(s_prev)
        t = ctanh(cadd(keys, q))
        return cmatmul(t, self.v)


class BilinearAttention:
    """General bilinear score through a learned square map."""

    kind = "L"

    def __init__(self, hidden_dim: int, rng: np.random.Generator, dtype=np.float64):
        limit = glorot_limit(hidden_dim, hidden_dim)
        self.w = CTensor(rng.uniform(-limit, limit, (hidden_dim, hidden_dim)).astype(dtype),
                         rng.uniform(-limit, limit, (hidden_dim, hidden_dim)).astype(dtype))

    def parameters(self):
        return [("w", self.w)]

    def score_one(self, s_prev: CTensor, h_j: CTensor) -> CTensor:
        return cdot(s_prev, cmatmul(self.w, h_j))

    def project_keys(self, states_matrix: CTensor) -> CTensor:
        return cmatmul(self.w, states_matrix)

    def scores(self, s_prev: CTensor, keys: CTensor) -> CTensor:
        return cmatmul(keys, s_prev)


@dataclass
class AttentionPack:
    """Per-sentence cache for decoding: stacked states and projected keys."""

    states_t: CTensor  # (hidden x n), states as columns
    keys: CTensor      # (n x hidden) projected by the score function
    count: int


@dataclass
class DecodeStep:
    """What one decoder step looked like, detached from the tape."""

    weights_re: np.ndarray
    weights_im: np.ndarray
    word_id: int
    dep_id: int
    word_probs: np.ndarray
    dep_probs: np.ndarray


@dataclass
class DecodeTrace:
    steps: list = field(default_factory=list)


@dataclass
class Hypothesis:
    """A (possibly finished) beam item."""

    words: list
    deps: list
    logp_sum: float
    length: int
    trace: DecodeTrace
    finished: bool
    state: CTensor = None

    @property
    def score(self) -> float:
        return self.logp_sum / max(self.length, 1)


class ComplexSeq2Seq:
    """Encoder-decoder over complex states with syntax-aware embeddings."""

    def __init__(self, vocabs: VocabBundle, embed_dim: int, hidden_dim: int,
                 variant: str = "B", rng: np.random.Generator = None, dtype=np.float64):
        if variant not in VARIANTS:
            raise UsageError(f"unknown attention variant {variant!r}, expected one of {VARIANTS}")
        if rng is None:
            rng = named_rng(0, "model-init")
        self.vocabs = vocabs
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        self.variant = variant
        self.dtype = np.dtype(dtype)
        self.real_mode = False

        self.src_emb = SyntaxEmbedding(len(vocabs.src_words), len(vocabs.src_deps),
                                       embed_dim, rng, dtype)
        self.tgt_emb = SyntaxEmbedding(len(vocabs.tgt_words), len(vocabs.tgt_deps),
                                       embed_dim, rng, dtype)
        self.encoder_cell = CRNNCell(embed_dim, hidden_dim, rng, dtype)
        self.decoder_cell = CRNNCell(embed_dim + hidden_dim, hidden_dim, rng, dtype)
        if variant == "B":
            self.attention = AdditiveAttention(hidden_dim, rng, dtype)
        else:
            self.attention = BilinearAttention(hidden_dim, rng, dtype)
        self.head_word = CLinear(len(vocabs.tgt_words), hidden_dim, rng, dtype)
        self.head_dep = CLinear(len(vocabs.tgt_deps), hidden_dim, rng, dtype)

    # -- parameter plumbing -------------------------------------------------

    def named_parameters(self):
        out = []
        for prefix, obj in (("src_emb", self.src_emb), ("tgt_emb", self.tgt_emb),
                            ("encoder", self.encoder_cell), ("decoder", self.decoder_cell),
                            ("attention", self.attention),
                            ("head_word", self.head_word), ("head_dep", self.head_dep)):
            out.extend((f"{prefix}.{n}", p) for n, p in obj.parameters())
        return out

    def attach(self, tape):
        for _, p in self.named_parameters():
            tape.watch(p)

    def detach(self):
        for _, p in self.named_parameters():
            p.detach()

    def state_arrays(self) -> dict:
        return {n: (p.re.copy(), p.im.copy()) for n, p in self.named_parameters()}

    def load_state(self, arrays: dict):
        for n, p in self.named_parameters():
            if n not in arrays:
                raise KeyError(f"missing parameter {n}")
            re, im = arrays[n]
            if re.shape != p.re.shape:
                raise ShapeError(f"parameter {n}: stored shape {re.shape} vs model shape {p.re.shape}")
            p.re[...] = re
            p.im[...] = im

    def clone(self) -> "ComplexSeq2Seq":
        other = ComplexSeq2Seq(self.vocabs, self.embed_dim, self.hidden_dim,
                               self.variant, named_rng(0, "clone"), self.dtype)
        other.load_state(self.state_arrays())
        other.real_mode = self.real_mode
        return other

    def zero_imaginary_copy(self) -> "ComplexSeq2Seq":
        """Degenerate configuration: imaginary parameter blocks and dependency
        tables zeroed, attention weights kept real.  Collapses to the classic
        real-valued attention seq2seq over the real parts of the weights."""
        other = self.clone()
        for _, p in other.named_parameters():
            p.im[...] = 0.0
        other.src_emb.dep_table.re[...] = 0.0
        other.tgt_emb.dep_table.re[...] = 0.0
        other.real_mode = True
        return other

    # -- encoder ------------------------------------------------------------

    def _zero_state(self) -> CTensor:
        z = np.zeros(self.hidden_dim, dtype=self.dtype)
        return CTensor(z, z.copy())

    def encode(self, word_ids, dep_ids, mask=None) -> list:
        """States for every position; masked steps carry the previous state
        forward unchanged (padding is trailing, so real positions are exact)."""
        word_ids = np.asarray(word_ids, dtype=np.int64)
        n = word_ids.shape[0]
        emb = syntax_embed(word_ids, dep_ids, self.src_emb)
        h = self._zero_state()
        states = []
        for t in range(n):
            if mask is not None and not mask[t]:
                states.append(h)
                continue
            h = crnn_step(self.encoder_cell, crow(emb, t), h)
            states.append(h)
        return states

    # -- attention ----------------------------------------------------------

    def align_score(self, s_prev: CTensor, h_j: CTensor) -> CTensor:
        """Unnormalized complex alignment score for one (state, position) pair."""
        return self.attention.score_one(s_prev, h_j)

    def attention_pack(self, states, mask=None) -> AttentionPack:
        if mask is not None:
            states = [s for s, m in zip(states, mask) if m]
        if not states:
            raise UsageError("attention over a fully masked source")
        H = cstack(states)
        return AttentionPack(states_t=ctranspose(H),
                             keys=self.attention.project_keys(H),
                             count=len(states))

    def attend(self, s_prev: CTensor, pack: AttentionPack):
        """Split-softmax weights over source positions and the complex-weighted
        context.  In real mode the imaginary weight plane is dropped."""
        weights = csoftmax(self.attention.scores(s_prev, pack.keys))
        if self.real_mode:
            weights = drop_imag(weights)
        context = cmatmul(pack.states_t, weights)
        return context, weights

    # -- decoder ------------------------------------------------------------

    def decode_step(self, prev_word_id: int, prev_dep_id: int, s_prev: CTensor,
                    pack: AttentionPack):
        """One teacher-forcible decoder step.

        Returns (state, word log-dist, dep log-dist, attention weights)."""
        emb = syntax_embed([prev_word_id], [prev_dep_id], self.tgt_emb)
        context, weights = self.attend(s_prev, pack)
        x = cconcat(crow(emb, 0), context)
        s = crnn_step(self.decoder_cell, x, s_prev)
        word_logp = log_softmax(modulus(self.head_word(s)))
        dep_logp = log_softmax(modulus(self.head_dep(s)))
        return s, word_logp, dep_logp, weights

    def _trace_step(self, word_logp, dep_logp, weights, word_id=None, dep_id=None) -> DecodeStep:
        wid = int(np.argmax(word_logp.re)) if word_id is None else int(word_id)
        did = int(np.argmax(dep_logp.re)) if dep_id is None else int(dep_id)
        return DecodeStep(weights_re=weights.re.copy(), weights_im=weights.im.copy(),
                          word_id=wid, dep_id=did,
                          word_probs=np.exp(word_logp.re), dep_probs=np.exp(dep_logp.re))

    def forward_teacher_forced(self, batch):
        """Gold-fed decoding over a padded batch.

        Returns per-sentence lists of word and dependency log-dists (one entry
        per real target step, i.e. target length - 1) plus decode traces.
        Sentences are processed independently; padding contributes nothing.
        """
        word_out, dep_out, traces = [], [], []
        for b in range(batch.size):
            L = int(batch.src_mask[b].sum())
            T = int(batch.tgt_mask[b].sum())
            states = self.encode(batch.src_words[b], batch.src_deps[b], batch.src_mask[b])
            pack = self.attention_pack(states, batch.src_mask[b])
            s = states[L - 1]
            w_list, d_list, steps = [], [], []
            for t in range(1, T):
                s, wl, dl, wt = self.decode_step(int(batch.tgt_words[b][t - 1]),
                                                 int(batch.tgt_deps[b][t - 1]), s, pack)
                w_list.append(wl)
                d_list.append(dl)
                steps.append(self._trace_step(wl, dl, wt))
            word_out.append(w_list)
            dep_out.append(d_list)
            traces.append(DecodeTrace(steps))
        return word_out, dep_out, traces

    def greedy_decode(self, src_words, src_deps, max_len: int = 50):
        """Argmax decoding; feeds back the argmax word and dependency label.

        Returns (word ids, dep ids, trace).  Stops at EOS or after ``max_len``
        steps; the trace includes the step that produced EOS.
        """
        if max_len < 1:
            raise UsageError(f"max_len must be >= 1, got {max_len}")
        states = self.encode(src_words, src_deps)
        pack = self.attention_pack(states)
        s = states[-1]
        prev_w, prev_d = BOS_ID, DEP_NONE_ID
        words, deps, steps = [], [], []
        for _ in range(max_len):
            s, wl, dl, wt = self.decode_step(prev_w, prev_d, s, pack)
            wid = int(np.argmax(wl.re))
            did = int(np.argmax(dl.re))
            steps.append(self._trace_step(wl, dl, wt, wid, did))
            if wid == EOS_ID:
                break
            words.append(wid)
            deps.append(did)
            prev_w, prev_d = wid, did
        return words, deps, DecodeTrace(steps)

    def _greedy_hypothesis(self, src_words, src_deps, max_len: int) -> Hypothesis:
        words, deps, trace = self.greedy_decode(src_words, src_deps, max_len)
        logp = 0.0
        for step in trace.steps:
            logp += float(np.log(step.word_probs[step.word_id]))
        finished = bool(trace.steps) and trace.steps[-1].word_id == EOS_ID
        return Hypothesis(words=words, deps=deps, logp_sum=logp, length=len(trace.steps),
                          trace=trace, finished=finished)

    def beam_decode(self, src_words, src_deps, beam_size: int = 4, max_len: int = 50) -> Hypothesis:
        """Beam search over words, scored by length-normalized word log-prob
        sums (dependency log-probs do not enter the score; the fed-back label
        is the argmax).  Ties break toward the lowest word id.  Never returns
        a hypothesis scoring below the greedy one."""
        if beam_size < 1:
            raise UsageError(f"beam_size must be >= 1, got {beam_size}")
        if max_len < 1:
            raise UsageError(f"max_len must be >= 1, got {max_len}")
        states = self.encode(src_words, src_deps)
        pack = self.attention_pack(states)
        root = Hypothesis(words=[], deps=[], logp_sum=0.0, length=0,
                          trace=DecodeTrace([]), finished=False, state=states[-1])
        live = [root]
        finished = []
        for _ in range(max_len):
            grown = []
            for hyp in live:
                prev_w = hyp.words[-1] if hyp.words else BOS_ID
                prev_d = hyp.deps[-1] if hyp.deps else DEP_NONE_ID
                s, wl, dl, wt = self.decode_step(prev_w, prev_d, hyp.state, pack)
                did = int(np.argmax(dl.re))
                logs = wl.re
                order = np.argsort(-logs, kind="stable")[:beam_size]
                for wid in order:
                    wid = int(wid)
                    step = self._trace_step(wl, dl, wt, wid, did)
                    cand = Hypothesis(
                        words=hyp.words if wid == EOS_ID else hyp.words + [wid],
                        deps=hyp.deps if wid == EOS_ID else hyp.deps + [did],
                        logp_sum=hyp.logp_sum + float(logs[wid]),
                        length=hyp.length + 1,
                        trace=DecodeTrace(hyp.trace.steps + [step]),
                        finished=wid == EOS_ID,
                        state=None if wid == EOS_ID else s,
                    )
                    (finished if cand.finished else grown).append(cand)
            grown.sort(key=lambda h: -h.score)
            live = grown[:beam_size]
            if not live:
                break
        pool = finished + live
        best = max(pool, key=lambda h: h.score)
        greedy = self._greedy_hypothesis(src_words, src_deps, max_len)
        return best if best.score >= greedy.score else greedy


def export_attention(trace: DecodeTrace, src_tokens, tgt_tokens, path):
    """Write the attention matrices as two TSV files, ``path + '.re.tsv'`` and
    ``path + '.im.tsv'``; rows are target steps, columns source tokens."""
    if len(trace.steps) != len(tgt_tokens):
        raise UsageError(f"{len(trace.steps)} trace steps but {len(tgt_tokens)} target tokens")
    for step in trace.steps:
        if step.weights_re.shape[0] != len(src_tokens):
            raise UsageError(f"trace width {step.weights_re.shape[0]} but {len(src_tokens)} source tokens")
    written = []
    for plane in ("re", "im"):
        out = str(path) + f".{plane}.tsv"
        with open(out, "w", encoding="utf-8") as fh:
            fh.write("\t".join([""] + list(src_tokens)) + "\n")
            for tok, step in zip(tgt_tokens, trace.steps):
                row = getattr(step, f"weights_{plane}")
                fh.write("\t".join([tok] + [f"{v:.6f}" for v in row]) + "\n")
        written.append(out)
    return written


def read_attention_tsv(path):
    """Parse a file written by ``export_attention`` back into (src, tgt, matrix)."""
    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    src = lines[0].split("\t")[1:]
    tgt, rows = [], []
    for line in lines[1:]:
        cells = line.split("\t")
        tgt.append(cells[0])
        rows.append([float(v) for v in cells[1:]])
    return src, tgt, np.array(rows)
