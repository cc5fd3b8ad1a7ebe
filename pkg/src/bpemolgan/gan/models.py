"""LSTM generator and bidirectional-LSTM per-token discriminator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..neural import functional as F
from ..neural.params import ParamStore
from ..neural.rng import rng_for
from ..tokenizer import BOS, EOS, PAD, UNK

_BANNED_LOGIT = -1e9


def _uniform(rng, fan_in: int, shape) -> np.ndarray:
    k = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-k, k, shape)


@dataclass
class SampleBatch:
    tokens: np.ndarray  # (B, T) emitted ids, PAD after the end
    lengths: np.ndarray  # (B,) emitted count including EOS
    log_probs: np.ndarray  # (B, T) log p of each emitted token, 0 on padding
    noise: np.ndarray  # (B, noise_dim)
    masks: tuple[np.ndarray, np.ndarray] | None  # dropout masks used while sampling

    @property
    def mask(self) -> np.ndarray:
        return np.arange(self.tokens.shape[1])[None, :] < self.lengths[:, None]

    def inputs(self) -> np.ndarray:
        """Teacher-forcing inputs: BOS followed by the emitted tokens shifted right."""
        return shift_right(self.tokens)


def shift_right(tokens: np.ndarray) -> np.ndarray:
    out = np.empty_like(tokens)
    out[:, 0] = BOS
    out[:, 1:] = tokens[:, :-1]
    return out


def length_mask(lengths: np.ndarray, T: int) -> np.ndarray:
    return np.arange(T)[None, :] < np.asarray(lengths)[:, None]


class Generator:
    """Noise -> (h0, c0) -> LSTM over embedded previous tokens -> softmax.

    Dropout wraps the embedding input and the LSTM output. PAD, BOS and UNK
    get a large negative logit so they are never emitted.
    """

    def __init__(self, cfg, store: ParamStore | None = None, seed: int = 0):
        self.cfg = cfg
        if store is None:
            store = self._init_store(cfg, seed)
        self.store = store
        bias = np.zeros(cfg.vocab_size)
        bias[[PAD, BOS, UNK]] = _BANNED_LOGIT
        self.logit_bias = bias

    @staticmethod
    def _init_store(cfg, seed: int) -> ParamStore:
        rng = rng_for(seed, 0, "init.generator")
        V, E, H, Z = cfg.vocab_size, cfg.embedding_dim, cfg.hidden_size, cfg.noise_dim
        s = ParamStore()
        s.add("gen.emb", rng.normal(0.0, 1.0, (V, E)))
        s.add("gen.h0.W", _uniform(rng, Z, (Z, H)))
        s.add("gen.h0.b", np.zeros(H))
        s.add("gen.c0.W", _uniform(rng, Z, (Z, H)))
        s.add("gen.c0.b", np.zeros(H))
        s.add_lstm("gen.lstm", F.LSTMCellParams.init(E, H, rng))
        s.add("gen.out.W", _uniform(rng, H, (H, V)))
        s.add("gen.out.b", np.zeros(V))
        return s

    def noise(self, n: int, seed: int, step: int, stream: str = "gen.noise") -> np.ndarray:
        return rng_for(seed, step, stream).standard_normal((n, self.cfg.noise_dim))

    def dropout_masks(self, n: int, T: int, seed: int, step: int, stream: str = "gen"):
        p = self.cfg.dropout
        m_in = F.dropout_mask((n, T, self.cfg.embedding_dim), p, rng_for(seed, step, stream + ".drop_in"))
        m_out = F.dropout_mask((n, T, self.cfg.hidden_size), p, rng_for(seed, step, stream + ".drop_out"))
        return m_in, m_out

    def initial_state(self, z):
        s = self.store
        return F.affine(z, s["gen.h0.W"], s["gen.h0.b"]), F.affine(z, s["gen.c0.W"], s["gen.c0.b"])

    # teacher forcing

    def forward(self, z, inputs, masks=None):
        """Log-probabilities (B, T, V) for every next token given ``inputs``."""
        s = self.store
        h0, c0 = self.initial_state(z)
        e = F.embedding(s["gen.emb"], inputs)
        xe = e * masks[0] if masks is not None else e
        hs, caches = F.lstm_forward(s.lstm("gen.lstm"), xe, h0, c0)
        hd = hs * masks[1] if masks is not None else hs
        logits = F.affine(hd, s["gen.out.W"], s["gen.out.b"]) + self.logit_bias
        F.check_finite(logits, "generator logits")
        logp = F.log_softmax(logits)
        return logp, (z, inputs, masks, caches, hd)

    def backward(self, dlogits, cache) -> None:
        """Accumulate parameter gradients given dL/dlogits (B, T, V)."""
        s = self.store
        g = s.grads
        z, inputs, masks, caches, hd = cache
        dhd = F.affine_backward(dlogits, hd, s["gen.out.W"], g, "gen.out")
        dhs = dhd * masks[1] if masks is not None else dhd
        dxe, dh0, dc0 = F.lstm_backward(s.lstm("gen.lstm"), caches, dhs, g, "gen.lstm")
        de = dxe * masks[0] if masks is not None else dxe
        F.embedding_backward(de, inputs, g, "gen.emb")
        F.affine_backward(dh0, z, s["gen.h0.W"], g, "gen.h0")
        F.affine_backward(dc0, z, s["gen.c0.W"], g, "gen.c0")

    # sampling

    def sample(
        self,
        n: int,
        seed: int,
        step: int,
        training: bool = False,
        max_len: int | None = None,
        stream: str = "gen",
    ) -> SampleBatch:
        """Autoregressive sampling from BOS until EOS or ``max_len`` tokens."""
        s = self.store
        T = max_len or self.cfg.max_len
        z = self.noise(n, seed, step, stream + ".noise")
        masks = self.dropout_masks(n, T, seed, step, stream) if training and self.cfg.dropout else None
        rng = rng_for(seed, step, stream + ".sample")
        cell = s.lstm("gen.lstm")
        h, c = self.initial_state(z)
        tokens = np.full((n, T), PAD, dtype=np.int64)
        logps = np.zeros((n, T))
        lengths = np.full(n, T, dtype=np.int64)
        done = np.zeros(n, dtype=bool)
        prev = np.full(n, BOS, dtype=np.int64)
        for t in range(T):
            x = s["gen.emb"][prev]
            if masks is not None:
                x = x * masks[0][:, t]
            h, c = F.lstm_step(cell, x, h, c)
            hd = h * masks[1][:, t] if masks is not None else h
            logits = hd @ s["gen.out.W"] + s["gen.out.b"] + self.logit_bias
            F.check_finite(logits, "generator logits")
            logp = F.log_softmax(logits)
            cdf = np.cumsum(np.exp(logp), axis=1)
            # u in (0, total] so zero-probability tokens are never chosen
            u = (1.0 - rng.random(n)) * cdf[:, -1]
            tok = np.minimum((cdf < u[:, None]).sum(axis=1), self.cfg.vocab_size - 1)
            live = ~done
            tokens[live, t] = tok[live]
            logps[live, t] = logp[live, tok[live]]
            ended = live & (tok == EOS)
            lengths[ended] = t + 1
            done |= ended
            prev = tok
            if done.all():
                break
        return SampleBatch(tokens, lengths, logps, z, masks)


class Discriminator:
    """Embedding -> bidirectional LSTM -> dropout -> affine -> sigmoid per token."""

    def __init__(self, cfg, store: ParamStore | None = None, seed: int = 0):
        self.cfg = cfg
        if store is None:
            store = self._init_store(cfg, seed)
        self.store = store

    @staticmethod
    def _init_store(cfg, seed: int) -> ParamStore:
        rng = rng_for(seed, 0, "init.discriminator")
        V, E, H = cfg.vocab_size, cfg.embedding_dim, cfg.hidden_size
        s = ParamStore()
        s.add("disc.emb", rng.normal(0.0, 1.0, (V, E)))
        s.add_lstm("disc.fwd", F.LSTMCellParams.init(E, H, rng))
        s.add_lstm("disc.bwd", F.LSTMCellParams.init(E, H, rng))
        s.add("disc.out.W", _uniform(rng, 2 * H, (2 * H, 1)))
        s.add("disc.out.b", np.zeros(1))
        return s

    def dropout_mask(self, n: int, T: int, seed: int, step: int, stream: str) -> np.ndarray | None:
        if not self.cfg.dropout:
            return None
        return F.dropout_mask((n, T, 2 * self.cfg.hidden_size), self.cfg.dropout, rng_for(seed, step, stream))

    def states(self, tokens, lengths):
        s = self.store
        e = F.embedding(s["disc.emb"], tokens)
        out, bcache = F.bilstm_forward(s.lstm("disc.fwd"), s.lstm("disc.bwd"), e, lengths)
        return out, (tokens, bcache)

    def forward(self, tokens, lengths, mask=None):
        """Per-token probability that the token comes from real data: (B, T)."""
        s = self.store
        out, scache = self.states(tokens, lengths)
        od = out * mask if mask is not None else out
        logits = F.affine(od, s["disc.out.W"], s["disc.out.b"])[..., 0]
        F.check_finite(logits, "discriminator logits")
        return F.sigmoid(logits), (scache, mask, od)

    def score(self, tokens, lengths) -> np.ndarray:
        """Eval-mode probabilities, no dropout."""
        return self.forward(tokens, lengths)[0]

    def backward(self, dlogits, cache) -> None:
        s = self.store
        g = s.grads
        (tokens, bcache), mask, od = cache
        dod = F.affine_backward(dlogits[..., None], od, s["disc.out.W"], g, "disc.out")
        dout = dod * mask if mask is not None else dod
        de = F.bilstm_backward(s.lstm("disc.fwd"), s.lstm("disc.bwd"), bcache, dout, g, "disc.fwd", "disc.bwd")
        F.embedding_backward(de, tokens, g, "disc.emb")

    def embed(self, tokens, lengths) -> np.ndarray:
        """Mean over real positions of the bidirectional state: (B, 2H)."""
        out, _ = self.states(tokens, lengths)
        m = length_mask(lengths, tokens.shape[1])[..., None]
        return (out * m).sum(axis=1) / np.maximum(lengths, 1)[:, None]
