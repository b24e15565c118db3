"""Complex neural layers: split activations, affine maps, and the tanh recurrence.

Real nonlinearities are lifted to complex values by applying them to each
plane independently; softmax follows the same convention, normalizing the real
and imaginary planes separately.
"""
from __future__ import annotations

import numpy as np

from .ctensor import CTensor, ShapeError, _result, cadd, cmatmul


def crelu(z: CTensor) -> CTensor:
    """ReLU on each plane."""
    re = np.maximum(z.re, 0.0)
    im = np.maximum(z.im, 0.0)
    mr = z.re > 0
    mi = z.im > 0

    def make(ids):
        (zn,) = ids

        def bwd(gre, gim, accum):
            if zn is not None:
                accum(zn, gre * mr, gim * mi)

        return bwd

    return _result(re, im, (z,), make)


def ctanh(z: CTensor) -> CTensor:
    """tanh on each plane."""
    tr = np.tanh(z.re)
    ti = np.tanh(z.im)

    def make(ids):
        (zn,) = ids

        def bwd(gre, gim, accum):
            if zn is not None:
                accum(zn, gre * (1.0 - tr * tr), gim * (1.0 - ti * ti))

        return bwd

    return _result(tr, ti, (z,), make)


def csoftmax(z: CTensor) -> CTensor:
    """Softmax over a vector, applied to each plane independently.

    Each output plane is a probability distribution (entries in [0, 1] summing
    to 1); each plane is invariant to constant shifts of its input plane.
    """
    if z.re.ndim != 1 or z.re.size == 0:
        raise ShapeError(f"csoftmax needs a nonempty vector, got shape {z.shape}")

    def softmax(a):
        e = np.exp(a - a.max())
        return e / e.sum()

    pr = softmax(z.re)
    pi = softmax(z.im)

    def make(ids):
        (zn,) = ids

        def bwd(gre, gim, accum):
            if zn is not None:
                accum(zn, pr * (gre - np.dot(gre, pr)), pi * (gim - np.dot(gim, pi)))

        return bwd

    return _result(pr, pi, (z,), make)


def glorot_limit(fan_in: int, fan_out: int) -> float:
    """Uniform init bound for one plane: Glorot scaled by 1/sqrt(2) so the
    complex value keeps unit-style variance across both planes."""
    return float(np.sqrt(6.0 / (fan_in + fan_out)) / np.sqrt(2.0))


def glorot_complex(out_dim: int, in_dim: int, rng: np.random.Generator, dtype=np.float64) -> CTensor:
    limit = glorot_limit(in_dim, out_dim)
    re = rng.uniform(-limit, limit, size=(out_dim, in_dim)).astype(dtype)
    im = rng.uniform(-limit, limit, size=(out_dim, in_dim)).astype(dtype)
    return CTensor(re, im)


class CLinear:
    """Complex affine map ``y = W z + b``."""

    def __init__(self, out_dim: int, in_dim: int, rng: np.random.Generator, dtype=np.float64):
        self.out_dim = out_dim
        self.in_dim = in_dim
        self.weight = glorot_complex(out_dim, in_dim, rng, dtype)
        self.bias = CTensor(np.zeros(out_dim, dtype=dtype), np.zeros(out_dim, dtype=dtype))

    def __call__(self, x: CTensor) -> CTensor:
        return cadd(cmatmul(self.weight, x), self.bias)

    def parameters(self):
        return [("weight", self.weight), ("bias", self.bias)]


class CRNNCell:
    """One tanh step of the complex recurrence.

    state' = Ctanh(W_in x + b_in + W_hid state + b_hid), all complex.
    """

    def __init__(self, input_dim: int, hidden_dim: int, rng: np.random.Generator, dtype=np.float64):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.input_transform = CLinear(hidden_dim, input_dim, rng, dtype)
        self.hidden_transform = CLinear(hidden_dim, hidden_dim, rng, dtype)

    def parameters(self):
        out = []
        for sub, layer in (("input", self.input_transform), ("hidden", self.hidden_transform)):
            out.extend((f"{sub}.{n}", p) for n, p in layer.parameters())
        return out


def crnn_step(cell: CRNNCell, x_t: CTensor, h_prev: CTensor) -> CTensor:
    """Advance the recurrence by one step."""
    return ctanh(cadd(cell.input_transform(x_t), cell.hidden_transform(h_prev)))
