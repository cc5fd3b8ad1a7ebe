"""Small numpy substrate: LSTM layers with explicit backward passes, Adam, checkpoints."""

from .functional import (
    DivergenceError,
    LSTMCellParams,
    affine,
    affine_backward,
    bilstm_backward,
    bilstm_forward,
    dropout,
    dropout_mask,
    embedding,
    embedding_backward,
    log_softmax,
    lstm_backward,
    lstm_forward,
    lstm_step,
    lstm_step_backward,
    sigmoid,
    softmax,
)
from .params import ParamStore, adam_update, clip_gradients
from .rng import rng_for

__all__ = [
    "DivergenceError",
    "LSTMCellParams",
    "ParamStore",
    "adam_update",
    "affine",
    "affine_backward",
    "bilstm_backward",
    "bilstm_forward",
    "clip_gradients",
    "dropout",
    "dropout_mask",
    "embedding",
    "embedding_backward",
    "log_softmax",
    "lstm_backward",
    "lstm_forward",
    "lstm_step",
    "lstm_step_backward",
    "rng_for",
    "sigmoid",
    "softmax",
]
