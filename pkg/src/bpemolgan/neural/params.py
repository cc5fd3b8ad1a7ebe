"""Named parameter storage, Adam and elementwise gradient clipping."""

from __future__ import annotations

import numpy as np

from .functional import LSTMCellParams


class ParamStore:
    """Ordered name -> array map with gradient buffers and Adam moments."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.step = 0

    def add(self, name: str, value: np.ndarray) -> np.ndarray:
        if name in self.params:
            raise KeyError(f"parameter {name!r} already exists")
        value = np.array(value, dtype=np.float64)
        self.params[name] = value
        self.grads[name] = np.zeros_like(value)
        self.m[name] = np.zeros_like(value)
        self.v[name] = np.zeros_like(value)
        return value

    def add_lstm(self, prefix: str, cell: LSTMCellParams) -> None:
        self.add(prefix + ".Wx", cell.Wx)
        self.add(prefix + ".Wh", cell.Wh)
        self.add(prefix + ".b", cell.b)

    def lstm(self, prefix: str) -> LSTMCellParams:
        return LSTMCellParams(self[prefix + ".Wx"], self[prefix + ".Wh"], self[prefix + ".b"])

    def __getitem__(self, name: str) -> np.ndarray:
        return self.params[name]

    def __iter__(self):
        return iter(self.params)

    def __len__(self) -> int:
        return len(self.params)

    def names(self) -> list[str]:
        return list(self.params)

    def zero_grad(self) -> None:
        for g in self.grads.values():
            g.fill(0.0)

    def reset_optimizer(self) -> None:
        for name in self.params:
            self.m[name].fill(0.0)
            self.v[name].fill(0.0)
        self.step = 0

    def n_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def sq_norm(self) -> float:
        return float(sum(np.sum(p * p) for p in self.params.values()))

    def quantize(self) -> None:
        """Round parameters and moments to float32 precision in place.

        Called whenever a checkpoint is written, so a run resumed from disk
        and the run that kept going in memory hold identical state.
        """
        for d in (self.params, self.m, self.v):
            for name, arr in d.items():
                arr[...] = arr.astype(np.float32).astype(np.float64)

    def copy(self) -> ParamStore:
        out = ParamStore()
        for name, value in self.params.items():
            out.add(name, value.copy())
            out.m[name][...] = self.m[name]
            out.v[name][...] = self.v[name]
        out.step = self.step
        return out


def clip_gradients(store: ParamStore, lo: float = -0.1, hi: float = 0.1) -> None:
    for g in store.grads.values():
        np.clip(g, lo, hi, out=g)


def adam_update(
    store: ParamStore,
    lr: float = 5e-6,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.0,
) -> None:
    """One bias-corrected Adam step; L2 decay is added to the gradient first."""
    store.step += 1
    t = store.step
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for name, p in store.params.items():
        g = store.grads[name]
        if weight_decay:
            g = g + weight_decay * p
        m = store.m[name]
        v = store.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
