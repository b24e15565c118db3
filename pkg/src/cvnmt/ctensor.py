"""Complex tensors stored as split real/imaginary planes, plus a reverse-mode tape.

A value is a pair of equally shaped float arrays (re, im); there is no complex
dtype anywhere.  Writing the arithmetic against the split form keeps the real
2x2 block structure of a complex product explicit:

    (A + iB)(x + iy) = (Ax - By) + i(Bx + Ay)

Rank is limited to 2 and the only broadcasting rule is a bias vector added
across the rows of a matrix.

Differentiation treats the two planes as independent real variables.  Ops
record themselves on a ``Tape`` whenever an operand is tracked; ``backward``
runs one reverse sweep from a real scalar loss and leaves per-tensor gradient
pairs behind.  A handful of real-plane ops (log_softmax, picked_nll) exist so a
cross-entropy style loss can ride the same tape; they require and produce a
zero imaginary plane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MODULUS_EPS = 1e-12


class ShapeError(ValueError):
    """Operand shapes do not fit the operation."""


class TapeUsageError(RuntimeError):
    """The tape API was used out of order (untracked loss, mixed tapes, ...)."""


def _as_plane(x, dtype=None) -> np.ndarray:
    a = np.asarray(x)
    if a.dtype not in (np.float32, np.float64):
        a = a.astype(np.float64)
    if dtype is not None and a.dtype != dtype:
        a = a.astype(dtype)
    return a


class CTensor:
    """A dense complex value ``re + i*im`` with the planes stored separately.

    ``real_only`` marks parameters whose imaginary plane is structurally unused
    (the embedding tables); optimizers and the gradient checker skip that plane.
    """

    __slots__ = ("re", "im", "tape", "node", "real_only")

    def __init__(self, re, im=None, dtype=None):
        self.re = _as_plane(re, dtype)
        self.im = _as_plane(im, self.re.dtype) if im is not None else np.zeros_like(self.re)
        if self.re.shape != self.im.shape:
            raise ShapeError(f"re/im planes differ: {self.re.shape} vs {self.im.shape}")
        if self.re.ndim > 2:
            raise ShapeError(f"rank {self.re.ndim} unsupported (max 2): shape {self.re.shape}")
        self.tape = None
        self.node = None
        self.real_only = False

    @property
    def shape(self):
        return self.re.shape

    @property
    def dtype(self):
        return self.re.dtype

    def is_tracked(self) -> bool:
        return self.tape is not None

    def detach(self) -> "CTensor":
        self.tape = None
        self.node = None
        return self

    def copy(self) -> "CTensor":
        out = CTensor(self.re.copy(), self.im.copy())
        out.real_only = self.real_only
        return out

    def __repr__(self):
        return f"CTensor(shape={self.shape}, dtype={self.dtype.name}, tracked={self.is_tracked()})"


class Tape:
    """Append-only operation record; replayed in reverse to accumulate gradients."""

    def __init__(self):
        self._backward_fns = []  # one slot per node, None for leaves
        self._grad_re = {}
        self._grad_im = {}

    def __len__(self):
        return len(self._backward_fns)

    def watch(self, t: CTensor) -> CTensor:
        """Register ``t`` as a leaf.  A tensor belongs to one tape at a time;
        watching it again simply moves it."""
        t.tape = self
        t.node = len(self._backward_fns)
        self._backward_fns.append(None)
        return t

    def _emit(self, out: CTensor, backward) -> CTensor:
        out.tape = self
        out.node = len(self._backward_fns)
        self._backward_fns.append(backward)
        return out

    def _accum(self, node: int, dre, dim):
        gre = self._grad_re.get(node)
        if gre is None:
            self._grad_re[node] = np.array(dre)
            self._grad_im[node] = np.array(dim)
        else:
            gre += dre
            self._grad_im[node] += dim


class Gradients:
    """Read-only view of the gradients a ``backward`` sweep left on a tape."""

    def __init__(self, tape: Tape):
        self._tape = tape

    def wrt(self, t: CTensor):
        """Gradient pair (d/d re, d/d im) for a watched tensor.

        Tensors the loss never touched get exact zeros.
        """
        if t.tape is not self._tape:
            raise TapeUsageError("tensor is not registered on the tape that produced these gradients")
        gre = self._tape._grad_re.get(t.node)
        if gre is None:
            return np.zeros_like(t.re), np.zeros_like(t.im)
        return gre, self._tape._grad_im[t.node]


def backward(loss: CTensor) -> Gradients:
    """Reverse sweep from a tracked real scalar; returns the gradient view."""
    tape = loss.tape
    if tape is None:
        raise TapeUsageError("backward needs a tracked tensor, got an untracked constant")
    if loss.shape != ():
        raise ShapeError(f"loss must be a scalar, got shape {loss.shape}")
    if loss.im != 0.0:
        raise TapeUsageError("loss must be real: imaginary part is nonzero")
    tape._grad_re = {loss.node: np.ones((), dtype=loss.dtype)}
    tape._grad_im = {loss.node: np.zeros((), dtype=loss.dtype)}
    fns = tape._backward_fns
    accum = tape._accum
    for node in range(loss.node, -1, -1):
        fn = fns[node]
        if fn is None:
            continue
        gre = tape._grad_re.get(node)
        if gre is None:
            continue
        fn(gre, tape._grad_im[node], accum)
    return Gradients(tape)


def _wrap(re, im) -> CTensor:
    """Untyped fast constructor for op results; planes are already validated
    by the op's own shape checks."""
    out = CTensor.__new__(CTensor)
    out.re = re
    out.im = im
    out.tape = None
    out.node = None
    out.real_only = False
    return out


def _result(re, im, parents, make_backward) -> CTensor:
    tape = None
    for p in parents:
        if p.tape is not None:
            if tape is None:
                tape = p.tape
            elif tape is not p.tape:
                raise TapeUsageError("operands live on different tapes")
    out = _wrap(re, im)
    if tape is None:
        return out
    ids = tuple(p.node if p.tape is not None else None for p in parents)
    return tape._emit(out, make_backward(ids))


# ---------------------------------------------------------------------------
# complex ops
# ---------------------------------------------------------------------------

def cmatmul(w: CTensor, h: CTensor) -> CTensor:
    """Complex matrix product ``w @ h``.

    ``w`` must be rank 2.  ``h`` is either a vector or a matrix whose rows are
    independent vectors (a batch); in the batched case row r of the result is
    ``w @ h[r]``.
    """
    A, B = w.re, w.im
    if A.ndim != 2:
        raise ShapeError(f"left operand must be rank 2, got shape {w.shape}")
    x, y = h.re, h.im
    if x.ndim == 1:
        if A.shape[1] != x.shape[0]:
            raise ShapeError(f"inner dimensions disagree: {A.shape} @ {x.shape}")
        re = A @ x - B @ y
        im = B @ x + A @ y

        def make(ids):
            wi, hi = ids

            def bwd(gre, gim, accum):
                if wi is not None:
                    accum(wi, np.outer(gre, x) + np.outer(gim, y),
                          np.outer(gim, x) - np.outer(gre, y))
                if hi is not None:
                    accum(hi, A.T @ gre + B.T @ gim, A.T @ gim - B.T @ gre)

            return bwd

        return _result(re, im, (w, h), make)
    if x.ndim == 2:
        if A.shape[1] != x.shape[1]:
            raise ShapeError(f"inner dimensions disagree: {A.shape} @ rows of {x.shape}")
        re = x @ A.T - y @ B.T
        im = x @ B.T + y @ A.T

        def make(ids):
            wi, hi = ids

            def bwd(gre, gim, accum):
                if wi is not None:
                    accum(wi, gre.T @ x + gim.T @ y, gim.T @ x - gre.T @ y)
                if hi is not None:
                    accum(hi, gre @ A + gim @ B, gim @ A - gre @ B)

            return bwd

        return _result(re, im, (w, h), make)
    raise ShapeError(f"right operand must be rank 1 or 2, got shape {h.shape}")


def cadd(a: CTensor, b: CTensor) -> CTensor:
    """Componentwise sum.  ``b`` may also be a bias vector added to every row
    of a matrix ``a``; no other broadcasting exists."""
    bias = False
    if a.shape == b.shape:
        pass
    elif a.re.ndim == 2 and b.re.ndim == 1 and a.shape[1] == b.shape[0]:
        bias = True
    else:
        raise ShapeError(f"cannot add shapes {a.shape} and {b.shape}")
    re = a.re + b.re
    im = a.im + b.im

    def make(ids):
        ai, bi = ids

        def bwd(gre, gim, accum):
            if ai is not None:
                accum(ai, gre, gim)
            if bi is not None:
                if bias:
                    accum(bi, gre.sum(axis=0), gim.sum(axis=0))
                else:
                    accum(bi, gre, gim)

        return bwd

    return _result(re, im, (a, b), make)


def cmul_scalar(a: CTensor, s) -> CTensor:
    """Elementwise product with a single complex scalar.

    ``s`` is a python number or a tracked scalar CTensor (as produced by a
    score/softmax pipeline); either way the whole tensor is rotated/scaled by
    one complex factor.
    """
    if isinstance(s, CTensor):
        if s.shape != ():
            raise ShapeError(f"scalar factor must have shape (), got {s.shape}")
        sr = float(s.re)
        si = float(s.im)
        parents = (a, s)
    else:
        z = complex(s)
        sr, si = z.real, z.imag
        parents = (a,)
    if not (math.isfinite(sr) and math.isfinite(si)):
        raise ValueError(f"scalar factor must be finite, got {sr}+{si}j")
    ar, ai = a.re, a.im
    re = ar * sr - ai * si
    im = ar * si + ai * sr

    def make(ids):
        if len(ids) == 2:
            an, sn = ids
        else:
            (an,) = ids
            sn = None

        def bwd(gre, gim, accum):
            if an is not None:
                accum(an, gre * sr + gim * si, gim * sr - gre * si)
            if sn is not None:
                accum(sn, np.sum(gre * ar + gim * ai), np.sum(gim * ar - gre * ai))

        return bwd

    return _result(re, im, parents, make)


def modulus(a: CTensor, eps: float = MODULUS_EPS) -> CTensor:
    """Elementwise magnitude ``sqrt(re^2 + im^2 + eps)``.

    The eps keeps the map differentiable at the origin.  The output is real
    (zero imaginary plane), so downstream real ops can consume it.
    """
    ar, ai = a.re, a.im
    m = np.sqrt(ar * ar + ai * ai + eps)

    def make(ids):
        (an,) = ids

        def bwd(gre, gim, accum):
            # the imaginary output plane is constant zero: gim carries nothing
            if an is not None:
                accum(an, gre * (ar / m), gre * (ai / m))

        return bwd

    return _result(m, np.zeros_like(m), (a,), make)


def drop_imag(a: CTensor) -> CTensor:
    """Zero the imaginary plane, keeping the real plane differentiable.

    This is the real-baseline switch: gradients flow through re and the im
    plane of the input receives exact zeros.
    """
    re = a.re

    def make(ids):
        (an,) = ids

        def bwd(gre, gim, accum):
            if an is not None:
                accum(an, gre, np.zeros_like(gre))

        return bwd

    return _result(re, np.zeros_like(re), (a,), make)


def crow(a: CTensor, i: int) -> CTensor:
    """Row ``i`` of a rank-2 tensor as a rank-1 tensor."""
    if a.re.ndim != 2:
        raise ShapeError(f"crow needs a rank-2 operand, got shape {a.shape}")
    n = a.re.shape[0]
    if not 0 <= i < n:
        raise IndexError(f"row {i} out of range for {n} rows")
    re = a.re[i]
    im = a.im[i]

    def make(ids):
        (an,) = ids

        def bwd(gre, gim, accum):
            if an is not None:
                dre = np.zeros_like(a.re)
                dim = np.zeros_like(a.im)
                dre[i] = gre
                dim[i] = gim
                accum(an, dre, dim)

        return bwd

    return _result(re, im, (a,), make)


def cstack(rows) -> CTensor:
    """Stack equal-length vectors into the rows of a matrix."""
    rows = list(rows)
    if not rows:
        raise ShapeError("cstack needs at least one row")
    for r in rows:
        if r.re.ndim != 1 or r.shape != rows[0].shape:
            raise ShapeError(f"cstack rows must be equal-length vectors, got {[tuple(q.shape) for q in rows]}")
    re = np.stack([r.re for r in rows])
    im = np.stack([r.im for r in rows])

    def make(ids):
        def bwd(gre, gim, accum):
            for k, nid in enumerate(ids):
                if nid is not None:
                    accum(nid, gre[k], gim[k])

        return bwd

    return _result(re, im, tuple(rows), make)


def cconcat(a: CTensor, b: CTensor) -> CTensor:
    """Concatenate two vectors along their only axis, plane by plane."""
    if a.re.ndim != 1 or b.re.ndim != 1:
        raise ShapeError(f"cconcat needs vectors, got shapes {a.shape} and {b.shape}")
    na = a.re.shape[0]
    re = np.concatenate([a.re, b.re])
    im = np.concatenate([a.im, b.im])

    def make(ids):
        ai, bi = ids

        def bwd(gre, gim, accum):
            if ai is not None:
                accum(ai, gre[:na], gim[:na])
            if bi is not None:
                accum(bi, gre[na:], gim[na:])

        return bwd

    return _result(re, im, (a, b), make)


def ctranspose(a: CTensor) -> CTensor:
    """Plain transpose of a rank-2 tensor (no conjugation)."""
    if a.re.ndim != 2:
        raise ShapeError(f"ctranspose needs a rank-2 operand, got shape {a.shape}")

    def make(ids):
        (an,) = ids

        def bwd(gre, gim, accum):
            if an is not None:
                accum(an, gre.T, gim.T)

        return bwd

    return _result(a.re.T, a.im.T, (a,), make)


def cdot(a: CTensor, b: CTensor) -> CTensor:
    """Complex dot product of two vectors, without conjugation."""
    if a.re.ndim != 1 or a.shape != b.shape:
        raise ShapeError(f"cdot needs two equal-length vectors, got {a.shape} and {b.shape}")
    ar, ai = a.re, a.im
    br, bi_ = b.re, b.im
    re = ar @ br - ai @ bi_
    im = ar @ bi_ + ai @ br

    def make(ids):
        an, bn = ids

        def bwd(gre, gim, accum):
            if an is not None:
                accum(an, gre * br + gim * bi_, gim * br - gre * bi_)
            if bn is not None:
                accum(bn, gre * ar + gim * ai, gim * ar - gre * ai)

        return bwd

    return _result(np.array(re), np.array(im), (a, b), make)


# ---------------------------------------------------------------------------
# real-plane ops (zero imaginary in, zero imaginary out)
# ---------------------------------------------------------------------------

def _require_real(t: CTensor, opname: str):
    if t.im.any():
        raise TapeUsageError(f"{opname} is a real op: imaginary plane must be zero")


def log_softmax(x: CTensor) -> CTensor:
    """Log-softmax over a real vector."""
    if x.re.ndim != 1 or x.re.size == 0:
        raise ShapeError(f"log_softmax needs a nonempty vector, got shape {x.shape}")
    _require_real(x, "log_softmax")
    z = x.re - x.re.max()
    p = np.exp(z)
    s = p.sum()
    out_re = z - math.log(s)
    p /= s

    def make(ids):
        (xn,) = ids

        def bwd(gre, gim, accum):
            if xn is not None:
                accum(xn, gre - p * gre.sum(), np.zeros_like(gre))

        return bwd

    return _result(out_re, np.zeros_like(out_re), (x,), make)


def picked_nll(logprobs: CTensor, ids) -> CTensor:
    """Negative sum of ``logprobs.re[t, ids[t]]`` over rows.

    The usual NLL of a gold index sequence under per-row log distributions.
    """
    if logprobs.re.ndim != 2:
        raise ShapeError(f"picked_nll needs a rank-2 log-prob matrix, got shape {logprobs.shape}")
    _require_real(logprobs, "picked_nll")
    ids = np.asarray(ids, dtype=np.int64)
    T, V = logprobs.re.shape
    if ids.shape != (T,):
        raise ShapeError(f"need one gold id per row: {ids.shape} vs {T} rows")
    if ids.size and (ids.min() < 0 or ids.max() >= V):
        raise IndexError(f"gold id out of range [0, {V})")
    rows = np.arange(T)
    val = -np.sum(logprobs.re[rows, ids])

    def make(idtuple):
        (ln,) = idtuple

        def bwd(gre, gim, accum):
            if ln is not None:
                d = np.zeros_like(logprobs.re)
                d[rows, ids] = -gre
                accum(ln, d, np.zeros_like(d))

        return bwd

    return _result(np.array(val), np.array(0.0, dtype=logprobs.dtype), (logprobs,), make)


# ---------------------------------------------------------------------------
# gradient checking
# ---------------------------------------------------------------------------

@dataclass
class GradCheckEntry:
    name: str
    max_rel_error: float
    worst_plane: str = "re"
    worst_index: int = 0


@dataclass
class GradCheckReport:
    tolerance: float
    entries: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def max_rel_error(self) -> float:
        return max((e.max_rel_error for e in self.entries), default=0.0)

    @property
    def passed(self) -> bool:
        return not self.failures and self.max_rel_error < self.tolerance


def grad_check(f, params, step: float = 1e-4, tolerance: float = 1e-4) -> GradCheckReport:
    """Compare tape gradients of ``f`` against central finite differences.

    ``f(tape)`` must rebuild its computation from the current parameter values
    and return a real scalar CTensor, watching the parameters when ``tape`` is
    not None and running untracked when it is None.  ``params`` is an iterable
    of (name, CTensor); tensors flagged ``real_only`` are only perturbed on the
    real plane.  Parameters are left detached afterwards.
    """
    params = [(str(n), p) for n, p in params]
    tape = Tape()
    for _, p in params:
        tape.watch(p)
    loss = f(tape)
    grads = backward(loss)
    analytic = {}
    for name, p in params:
        gre, gim = grads.wrt(p)
        analytic[name] = (np.array(gre, dtype=np.float64), np.array(gim, dtype=np.float64))
    for _, p in params:
        p.detach()

    report = GradCheckReport(tolerance=float(tolerance))

    def value():
        out = f(None)
        return float(out.re)

    for name, p in params:
        planes = ("re",) if p.real_only else ("re", "im")
        for plane_idx, plane in enumerate(planes):
            arr = getattr(p, plane)
            g_an = analytic[name][plane_idx].reshape(-1)
            numeric = np.zeros(arr.size)
            flat = arr.reshape(-1)
            for k in range(arr.size):
                orig = flat[k]
                flat[k] = orig + step
                f_plus = value()
                flat[k] = orig - step
                f_minus = value()
                flat[k] = orig
                if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
                    report.failures.append(f"{name}.{plane}[{k}]: non-finite value under perturbation")
                    numeric[k] = np.nan
                    continue
                numeric[k] = (f_plus - f_minus) / (2.0 * step)
            rel = np.abs(g_an - numeric) / (np.abs(g_an) + np.abs(numeric) + 1e-6)
            rel = np.where(np.isnan(numeric), np.inf, rel)
            worst = int(np.argmax(rel)) if rel.size else 0
            report.entries.append(GradCheckEntry(
                name=f"{name}.{plane}",
                max_rel_error=float(rel[worst]) if rel.size else 0.0,
                worst_plane=plane,
                worst_index=worst,
            ))
    return report


# ---------------------------------------------------------------------------
# debug dump
# ---------------------------------------------------------------------------

def dump(t: CTensor) -> str:
    """Render a tensor as two whitespace-separated real blocks (re, blank, im)."""
    def block(a):
        a2 = np.atleast_2d(a)
        return "\n".join(" ".join(f"{v:.17g}" for v in row) for row in a2)

    return block(t.re) + "\n\n" + block(t.im) + "\n"


def parse_dump(text: str) -> CTensor:
    """Inverse of ``dump`` up to print precision; always returns rank 2."""
    parts = text.strip().split("\n\n")
    if len(parts) != 2:
        raise ValueError("dump text must hold exactly two blocks separated by a blank line")

    def unblock(s):
        return np.array([[float(v) for v in line.split()] for line in s.strip().splitlines()])

    return CTensor(unblock(parts[0]), unblock(parts[1]))
