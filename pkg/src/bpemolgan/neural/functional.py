"""Layer math with hand-written backward passes (float64 throughout).

Each ``*_backward`` takes the upstream gradient and whatever the forward pass
cached, accumulates parameter gradients into the ``grads`` mapping it is
given, and returns the gradient w.r.t. the layer input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_TINY = np.finfo(np.float64).tiny
_ONE_MINUS = 1.0 - np.finfo(np.float64).epsneg


class DivergenceError(FloatingPointError):
    """Raised when a forward pass produces NaN or infinity."""


def check_finite(x: np.ndarray, what: str) -> np.ndarray:
    if not np.isfinite(x).all():
        raise DivergenceError(f"non-finite values in {what}")
    return x


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Logistic function clipped into the open interval (0, 1)."""
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return np.clip(out, _TINY, _ONE_MINUS)


def log_softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - logits.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    return np.exp(log_softmax(logits, axis))


def log_softmax_backward(dlogp: np.ndarray, logp: np.ndarray) -> np.ndarray:
    return dlogp - np.exp(logp) * dlogp.sum(axis=-1, keepdims=True)


# affine and embedding


def affine(x: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    return x @ W + b


def affine_backward(dy, x, W, grads, prefix: str) -> np.ndarray:
    flat_x = x.reshape(-1, x.shape[-1])
    flat_dy = dy.reshape(-1, dy.shape[-1])
    grads[prefix + ".W"] += flat_x.T @ flat_dy
    grads[prefix + ".b"] += flat_dy.sum(axis=0)
    return dy @ W.T


def embedding(table: np.ndarray, ids: np.ndarray) -> np.ndarray:
    return table[ids]


def embedding_backward(dout, ids, grads, name: str) -> None:
    g = grads[name]
    np.add.at(g, ids.reshape(-1), dout.reshape(-1, g.shape[1]))


# dropout


def dropout_mask(shape, p: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout mask: 0 with probability p, else 1/(1-p)."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if p == 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= p
    return keep / (1.0 - p)


def dropout(x: np.ndarray, p: float, training: bool, rng: np.random.Generator | None) -> np.ndarray:
    if not training or p == 0.0:
        return x
    return x * dropout_mask(x.shape, p, rng)


# LSTM


@dataclass
class LSTMCellParams:
    """Gate blocks are laid out [input, forget, candidate, output] along the last axis."""

    Wx: np.ndarray  # (D, 4H)
    Wh: np.ndarray  # (H, 4H)
    b: np.ndarray  # (4H,)

    @property
    def hidden_size(self) -> int:
        return self.Wh.shape[0]

    @property
    def input_size(self) -> int:
        return self.Wx.shape[0]

    @classmethod
    def init(cls, input_size: int, hidden: int, rng: np.random.Generator) -> LSTMCellParams:
        k = 1.0 / np.sqrt(hidden)
        return cls(
            rng.uniform(-k, k, (input_size, 4 * hidden)),
            rng.uniform(-k, k, (hidden, 4 * hidden)),
            rng.uniform(-k, k, 4 * hidden),
        )


def lstm_step(p: LSTMCellParams, x, h_prev, c_prev, cache: list | None = None):
    """One LSTM step; returns (h, c) and appends backward state to ``cache``."""
    H = p.hidden_size
    z = x @ p.Wx + h_prev @ p.Wh + p.b
    i = sigmoid(z[..., :H])
    f = sigmoid(z[..., H : 2 * H])
    g = np.tanh(z[..., 2 * H : 3 * H])
    o = sigmoid(z[..., 3 * H :])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    check_finite(h, "LSTM hidden state")
    check_finite(c, "LSTM cell state")
    if cache is not None:
        cache.append((x, h_prev, c_prev, i, f, g, o, tc))
    return h, c


def lstm_step_backward(p: LSTMCellParams, step_cache, dh, dc, grads, prefix: str):
    """Returns (dx, dh_prev, dc_prev) for one step."""
    x, h_prev, c_prev, i, f, g, o, tc = step_cache
    do = dh * tc
    dc = dc + dh * o * (1.0 - tc * tc)
    di = dc * g
    df = dc * c_prev
    dg = dc * i
    dc_prev = dc * f
    dz = np.concatenate(
        [di * i * (1 - i), df * f * (1 - f), dg * (1 - g * g), do * o * (1 - o)], axis=-1
    )
    dz2 = dz.reshape(-1, dz.shape[-1])
    grads[prefix + ".Wx"] += x.reshape(-1, x.shape[-1]).T @ dz2
    grads[prefix + ".Wh"] += h_prev.reshape(-1, h_prev.shape[-1]).T @ dz2
    grads[prefix + ".b"] += dz2.sum(axis=0)
    return dz @ p.Wx.T, dz @ p.Wh.T, dc_prev


def lstm_forward(p: LSTMCellParams, xs: np.ndarray, h0=None, c0=None):
    """Run over xs of shape (B, T, D). Returns (hs (B, T, H), caches)."""
    B, T, _ = xs.shape
    H = p.hidden_size
    h = np.zeros((B, H)) if h0 is None else h0
    c = np.zeros((B, H)) if c0 is None else c0
    hs = np.empty((B, T, H))
    caches: list = []
    for t in range(T):
        h, c = lstm_step(p, xs[:, t], h, c, caches)
        hs[:, t] = h
    return hs, caches


def lstm_backward(p: LSTMCellParams, caches, dhs: np.ndarray, grads, prefix: str):
    """Backprop through time. Returns (dxs, dh0, dc0)."""
    B, T, H = dhs.shape
    dxs = np.empty((B, T, p.input_size))
    dh = np.zeros((B, H))
    dc = np.zeros((B, H))
    for t in reversed(range(T)):
        dx, dh, dc = lstm_step_backward(p, caches[t], dhs[:, t] + dh, dc, grads, prefix)
        dxs[:, t] = dx
    return dxs, dh, dc


def reverse_index(lengths: np.ndarray, T: int) -> np.ndarray:
    """(B, T) gather index reversing each row within its length; padding stays put."""
    t = np.arange(T)[None, :]
    L = np.asarray(lengths)[:, None]
    return np.where(t < L, L - 1 - t, t)


def _gather_time(x: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return np.take_along_axis(x, idx[:, :, None], axis=1)


def bilstm_forward(pf: LSTMCellParams, pb: LSTMCellParams, xs: np.ndarray, lengths=None):
    """Forward and backward LSTMs concatenated per position: (B, T, 2H).

    Position t holds the forward state over x[:t+1] and the backward state
    over x[t:length]. Padding positions beyond a row's length never reach
    the real positions of that row.
    """
    B, T, _ = xs.shape
    if lengths is None:
        lengths = np.full(B, T)
    hf, cf = lstm_forward(pf, xs)
    rev = reverse_index(lengths, T)
    hb_rev, cb = lstm_forward(pb, _gather_time(xs, rev))
    hb = _gather_time(hb_rev, rev)  # the reversal is its own inverse
    return np.concatenate([hf, hb], axis=-1), (cf, cb, rev)


def bilstm_backward(pf, pb, cache, dout, grads, prefix_f: str, prefix_b: str) -> np.ndarray:
    cf, cb, rev = cache
    H = pf.hidden_size
    dxf, _, _ = lstm_backward(pf, cf, dout[..., :H], grads, prefix_f)
    dxb_rev, _, _ = lstm_backward(pb, cb, _gather_time(dout[..., H:], rev), grads, prefix_b)
    return dxf + _gather_time(dxb_rev, rev)
