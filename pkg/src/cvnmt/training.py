"""Training: the alpha-weighted joint loss, Adam with global-norm clipping,
the epoch loop with BLEU-based early stopping, and the checkpoint file format.
"""
from __future__ import annotations

import io
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import evaluation
from .ctensor import (CTensor, ShapeError, Tape, backward, cadd, cmul_scalar,
                      cstack, picked_nll)
from .data import (DepVocab, Vocab, VocabBundle, batch_pad, encode_example)
from .model import ComplexSeq2Seq
from .rng import named_rng


class TrainingError(RuntimeError):
    """Training hit a state it cannot continue from (non-finite loss, ...)."""


class CheckpointError(ValueError):
    """Base for checkpoint load failures."""


class CheckpointVersionError(CheckpointError):
    """The file is not a checkpoint of a supported format version."""


class CheckpointTruncatedError(CheckpointError):
    """The file ends before the arrays the header promises."""


class CheckpointShapeError(CheckpointError):
    """Stored tensor shapes disagree with the model the header describes."""


@dataclass
class TrainConfig:
    """Desk-scale defaults; ``paper_scale`` bumps the widths to 512."""

    alpha: float = 0.5
    hidden_dim: int = 64
    embed_dim: int = 64
    learning_rate: float = 1e-3
    batch_size: int = 16
    max_epochs: int = 300
    patience: int = 5
    seed: int = 0
    variant: str = "B"
    precision: str = "f64"
    grad_clip: float = 5.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.variant not in ("B", "L"):
            raise ValueError(f"variant must be B or L, got {self.variant!r}")
        if self.precision not in ("f64", "f32"):
            raise ValueError(f"precision must be f64 or f32, got {self.precision!r}")
        for name in ("hidden_dim", "embed_dim", "batch_size", "max_epochs", "patience"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")

    @property
    def np_dtype(self):
        return np.float64 if self.precision == "f64" else np.float32

    @classmethod
    def paper_scale(cls, **overrides) -> "TrainConfig":
        base = dict(hidden_dim=512, embed_dim=512)
        base.update(overrides)
        return cls(**base)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev_bleu: float
    elapsed_seconds: float


def build_model(vocabs: VocabBundle, config: TrainConfig) -> ComplexSeq2Seq:
    return ComplexSeq2Seq(vocabs, config.embed_dim, config.hidden_dim, config.variant,
                          named_rng(config.seed, "model-init"), config.np_dtype)


# ---------------------------------------------------------------------------
# loss
# ---------------------------------------------------------------------------

def joint_loss(word_logps, dep_logps, gold_words, gold_deps, mask, alpha) -> CTensor:
    """alpha * word NLL + (1 - alpha) * dependency NLL, each averaged over all
    real target steps in the batch.

    ``word_logps``/``dep_logps`` are per-sentence lists of per-step log-dist
    vectors as produced by teacher forcing; gold ids and mask are the padded
    batch arrays (wrapped targets, so step t predicts position t+1).
    """
    if not 0.0 <= float(alpha) <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if len(word_logps) != len(dep_logps) or len(word_logps) != len(gold_words):
        raise ShapeError("per-sentence list lengths disagree")
    total = 0
    word_sum = None
    dep_sum = None
    for b, (w_list, d_list) in enumerate(zip(word_logps, dep_logps)):
        steps = len(w_list)
        if steps != len(d_list):
            raise ShapeError(f"sentence {b}: {steps} word steps vs {len(d_list)} dependency steps")
        real = int(np.asarray(mask[b]).sum())
        if steps != real - 1:
            raise ShapeError(f"sentence {b}: {steps} steps for target length {real}")
        ids_w = np.asarray(gold_words[b])[1:steps + 1]
        ids_d = np.asarray(gold_deps[b])[1:steps + 1]
        nw = picked_nll(cstack(w_list), ids_w)
        nd = picked_nll(cstack(d_list), ids_d)
        word_sum = nw if word_sum is None else cadd(word_sum, nw)
        dep_sum = nd if dep_sum is None else cadd(dep_sum, nd)
        total += steps
    if total == 0:
        raise ShapeError("loss over zero target steps")
    word_nll = cmul_scalar(word_sum, 1.0 / total)
    dep_nll = cmul_scalar(dep_sum, 1.0 / total)
    return cadd(cmul_scalar(word_nll, float(alpha)), cmul_scalar(dep_nll, 1.0 - float(alpha)))


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

class Adam:
    """Adam over every model parameter plane, with global-norm clipping."""

    def __init__(self, model: ComplexSeq2Seq, learning_rate: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.model = model
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.epochs_done = 0
        self.slots = []
        for _, p in model.named_parameters():
            self.slots.append({
                "m_re": np.zeros_like(p.re), "v_re": np.zeros_like(p.re),
                "m_im": np.zeros_like(p.im), "v_im": np.zeros_like(p.im),
            })

    def apply(self, grads, clip_norm: float = 0.0):
        params = self.model.named_parameters()
        pairs = []
        sq = 0.0
        for (_, p) in params:
            gre, gim = grads.wrt(p)
            sq += float(np.sum(gre * gre))
            if not p.real_only:
                sq += float(np.sum(gim * gim))
            pairs.append((p, gre, gim))
        norm = math.sqrt(sq)
        scale = 1.0
        if clip_norm and norm > clip_norm:
            scale = clip_norm / norm
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for (p, gre, gim), slot in zip(pairs, self.slots):
            for plane, g in (("re", gre), ("im", gim)):
                if plane == "im" and p.real_only:
                    continue
                g = g * scale
                m = slot[f"m_{plane}"]
                v = slot[f"v_{plane}"]
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * (g * g)
                update = self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
                target = p.re if plane == "re" else p.im
                target -= update
        return norm


# ---------------------------------------------------------------------------
# epoch loop
# ---------------------------------------------------------------------------

def train_epoch(model: ComplexSeq2Seq, batches, opt: Adam, config: TrainConfig) -> float:
    """One pass over the batches (order shuffled per epoch from the seed);
    returns the step-averaged loss."""
    if not batches:
        raise ValueError("no batches to train on")
    order = named_rng(config.seed, "epoch-order", opt.epochs_done).permutation(len(batches))
    losses = []
    for bi in order:
        batch = batches[int(bi)]
        tape = Tape()
        model.attach(tape)
        w, d, _ = model.forward_teacher_forced(batch)
        loss = joint_loss(w, d, batch.tgt_words, batch.tgt_deps, batch.tgt_mask, config.alpha)
        val = float(loss.re)
        if not math.isfinite(val):
            raise TrainingError(f"non-finite loss {val} in epoch {opt.epochs_done + 1}")
        grads = backward(loss)
        opt.apply(grads, config.grad_clip)
        losses.append(val)
    opt.epochs_done += 1
    model.detach()
    return float(np.mean(losses))


def _dev_bleu(model: ComplexSeq2Seq, dev_examples) -> float:
    model.detach()
    hyps, _ = evaluation.decode_corpus(model, dev_examples, beam_size=1)
    refs = [ex.target.tokens for ex in dev_examples]
    return evaluation.bleu(hyps, refs).bleu


@dataclass
class Checkpoint:
    """Everything needed to rebuild and resume a model."""

    config: TrainConfig
    params: dict
    vocabs: VocabBundle
    best_dev_bleu: float = 0.0
    epoch: int = 0
    real_mode: bool = False

    def build_model(self) -> ComplexSeq2Seq:
        model = build_model(self.vocabs, self.config)
        model.load_state(self.params)
        model.real_mode = self.real_mode
        return model


def snapshot(model: ComplexSeq2Seq, config: TrainConfig, best_dev_bleu: float = 0.0,
             epoch: int = 0) -> Checkpoint:
    return Checkpoint(config=replace(config), params=model.state_arrays(),
                      vocabs=model.vocabs, best_dev_bleu=best_dev_bleu, epoch=epoch,
                      real_mode=model.real_mode)


def fit(model: ComplexSeq2Seq, train_examples, dev_examples, config: TrainConfig):
    """Train with early stopping on greedy dev BLEU.

    Stops once ``patience`` consecutive epochs fail to improve the best dev
    BLEU (strict improvement), or at ``max_epochs``.  Returns the best
    checkpoint and the per-epoch history.
    """
    if not train_examples:
        raise ValueError("empty training set")
    if not dev_examples:
        raise ValueError("empty dev set")
    encoded = [encode_example(ex, model.vocabs) for ex in train_examples]
    batches = batch_pad(encoded, config.batch_size)
    opt = Adam(model, config.learning_rate)
    history = []
    best = None
    best_bleu = -1.0
    stale = 0
    for epoch in range(1, config.max_epochs + 1):
        t0 = time.perf_counter()
        train_loss = train_epoch(model, batches, opt, config)
        dev_bleu = _dev_bleu(model, dev_examples)
        history.append(EpochRecord(epoch=epoch, train_loss=train_loss, dev_bleu=dev_bleu,
                                   elapsed_seconds=time.perf_counter() - t0))
        if dev_bleu > best_bleu:
            best_bleu = dev_bleu
            best = snapshot(model, config, best_dev_bleu=dev_bleu, epoch=epoch)
            stale = 0
        else:
            stale += 1
        if stale >= config.patience:
            break
    return best, history


def write_history(history, path):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in history:
            fh.write(json.dumps(asdict(rec)) + "\n")


# ---------------------------------------------------------------------------
# checkpoint files
# ---------------------------------------------------------------------------

_MAGIC = "cvnmt-checkpoint"
_FORMAT_VERSION = 1
_VOCAB_SUFFIXES = {
    "src_words": ".src.words", "src_deps": ".src.deps",
    "tgt_words": ".tgt.words", "tgt_deps": ".tgt.deps",
}


def save_checkpoint(model: ComplexSeq2Seq, config: TrainConfig, path, *,
                    best_dev_bleu: float = 0.0, epoch: int = 0) -> None:
    """Write the model to ``path``: a text header (format version, dims, vocab
    sizes, tensor directory) followed by raw little-endian planes, re before im
    for each tensor.  Vocabularies go to sidecar files next to the checkpoint.
    """
    path = str(path)
    dtype = "<f8" if config.precision == "f64" else "<f4"
    params = model.state_arrays()
    directory = []
    offset = 0
    itemsize = np.dtype(dtype).itemsize
    for name, (re, _) in params.items():
        nbytes = re.size * itemsize * 2
        directory.append({"name": name, "shape": list(re.shape), "offset": offset,
                          "bytes": nbytes})
        offset += nbytes
    base = os.path.basename(path)
    header = {
        "format_version": _FORMAT_VERSION,
        "precision": config.precision,
        "variant": config.variant,
        "hidden_dim": config.hidden_dim,
        "embed_dim": config.embed_dim,
        "vocab_sizes": {
            "src_words": len(model.vocabs.src_words), "src_deps": len(model.vocabs.src_deps),
            "tgt_words": len(model.vocabs.tgt_words), "tgt_deps": len(model.vocabs.tgt_deps),
        },
        "vocab_files": {k: base + sfx for k, sfx in _VOCAB_SUFFIXES.items()},
        "config": asdict(config),
        "best_dev_bleu": float(best_dev_bleu),
        "epoch": int(epoch),
        "real_mode": bool(model.real_mode),
        "tensors": directory,
    }
    header_bytes = json.dumps(header, indent=1, sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    buf.write(f"{_MAGIC} v{_FORMAT_VERSION}\n".encode("ascii"))
    buf.write(f"header-bytes: {len(header_bytes)}\n".encode("ascii"))
    buf.write(header_bytes)
    buf.write(b"\n")
    for name, (re, im) in params.items():
        buf.write(np.ascontiguousarray(re, dtype=dtype).tobytes())
        buf.write(np.ascontiguousarray(im, dtype=dtype).tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())
    vb = model.vocabs
    for key, vocab in (("src_words", vb.src_words), ("src_deps", vb.src_deps),
                       ("tgt_words", vb.tgt_words), ("tgt_deps", vb.tgt_deps)):
        vocab.save(path + _VOCAB_SUFFIXES[key])


def inspect_checkpoint(path) -> dict:
    """Parse and validate the header without touching the arrays."""
    with open(path, "rb") as fh:
        magic = fh.readline().decode("ascii", errors="replace").strip()
        if not magic.startswith(_MAGIC):
            raise CheckpointVersionError(f"{path}: not a checkpoint file (magic {magic!r})")
        if magic != f"{_MAGIC} v{_FORMAT_VERSION}":
            raise CheckpointVersionError(f"{path}: unsupported version {magic!r}")
        size_line = fh.readline().decode("ascii", errors="replace").strip()
        if not size_line.startswith("header-bytes:"):
            raise CheckpointVersionError(f"{path}: malformed header length line")
        n = int(size_line.split(":", 1)[1])
        raw = fh.read(n)
        if len(raw) != n:
            raise CheckpointTruncatedError(f"{path}: header cut short ({len(raw)} of {n} bytes)")
        try:
            header = json.loads(raw.decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise CheckpointVersionError(f"{path}: header is not valid JSON: {exc}") from exc
        header["_data_start"] = fh.tell() + 1  # separator newline
    return header


def load_checkpoint(path) -> Checkpoint:
    """Rebuildable checkpoint from disk; errors are typed by failure mode."""
    path = str(path)
    header = inspect_checkpoint(path)
    cfg_dict = dict(header["config"])
    config = TrainConfig(**cfg_dict)
    dtype = "<f8" if header["precision"] == "f64" else "<f4"
    itemsize = np.dtype(dtype).itemsize
    vocab_dir = os.path.dirname(os.path.abspath(path))
    vocabs = {}
    for key, cls in (("src_words", Vocab), ("src_deps", DepVocab),
                     ("tgt_words", Vocab), ("tgt_deps", DepVocab)):
        vpath = os.path.join(vocab_dir, header["vocab_files"][key])
        if not os.path.exists(vpath):
            raise CheckpointError(f"{path}: missing vocabulary sidecar {vpath}")
        vocabs[key] = cls.load(vpath)
        if len(vocabs[key]) != header["vocab_sizes"][key]:
            raise CheckpointShapeError(
                f"{path}: vocabulary {key} has {len(vocabs[key])} entries, header says "
                f"{header['vocab_sizes'][key]}")
    bundle = VocabBundle(vocabs["src_words"], vocabs["src_deps"],
                         vocabs["tgt_words"], vocabs["tgt_deps"])
    params = {}
    with open(path, "rb") as fh:
        data_start = header["_data_start"]
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            expect = count * itemsize * 2
            if entry["bytes"] != expect:
                raise CheckpointShapeError(
                    f"{path}: tensor {entry['name']} directory says {entry['bytes']} bytes, "
                    f"shape {shape} needs {expect}")
            fh.seek(data_start + entry["offset"])
            raw = fh.read(expect)
            if len(raw) != expect:
                raise CheckpointTruncatedError(
                    f"{path}: tensor {entry['name']} cut short ({len(raw)} of {expect} bytes)")
            re = np.frombuffer(raw[:expect // 2], dtype=dtype).reshape(shape).copy()
            im = np.frombuffer(raw[expect // 2:], dtype=dtype).reshape(shape).copy()
            params[entry["name"]] = (re, im)
    ckpt = Checkpoint(config=config, params=params, vocabs=bundle,
                      best_dev_bleu=header["best_dev_bleu"], epoch=header["epoch"],
                      real_mode=header.get("real_mode", False))
    try:
        ckpt.build_model()
    except (KeyError, ShapeError) as exc:
        raise CheckpointShapeError(f"{path}: stored tensors do not fit the described model: {exc}") from exc
    return ckpt
