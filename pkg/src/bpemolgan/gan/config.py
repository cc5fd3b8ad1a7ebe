"""Model and training configuration.

Values stated for the original setup are the defaults: learning rate 5e-6,
batch 256, dropout 0.1, elementwise gradient clipping to [-0.1, 0.1], L2 1e-6
on the discriminator and an EMA factor of 0.9 for the reward baseline. Sizes
that were never reported (embedding, hidden, noise, T) are our choices.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields


class ConfigError(ValueError):
    pass


def _check_positive(obj, *names: str) -> None:
    for name in names:
        value = getattr(obj, name)
        if value <= 0:
            raise ConfigError(f"{type(obj).__name__}.{name} must be positive, got {value}")


def _check_dropout(obj) -> None:
    if not 0.0 <= obj.dropout < 1.0:
        raise ConfigError(f"{type(obj).__name__}.dropout must be in [0, 1), got {obj.dropout}")


@dataclass(frozen=True)
class GeneratorConfig:
    vocab_size: int
    max_len: int = 64
    noise_dim: int = 64
    embedding_dim: int = 64
    hidden_size: int = 256
    dropout: float = 0.1
    learning_rate: float = 5e-6
    grad_clip: float = 0.1

    def __post_init__(self):
        _check_positive(
            self, "vocab_size", "max_len", "noise_dim", "embedding_dim", "hidden_size",
            "learning_rate", "grad_clip",
        )
        _check_dropout(self)


@dataclass(frozen=True)
class DiscriminatorConfig:
    vocab_size: int
    embedding_dim: int = 64
    hidden_size: int = 256
    dropout: float = 0.1
    l2_coefficient: float = 1e-6
    learning_rate: float = 5e-6
    grad_clip: float = 0.1

    def __post_init__(self):
        _check_positive(
            self, "vocab_size", "embedding_dim", "hidden_size", "learning_rate",
            "grad_clip", "l2_coefficient",
        )
        _check_dropout(self)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 256
    max_steps: int = 1000
    d_steps: int = 1
    g_steps: int = 1
    pretrain_epochs: int = 10
    pretrain_lr: float = 1e-3
    baseline_alpha: float = 0.9
    checkpoint_every: int = 100
    eval_every: int = 100
    eval_samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.pretrain_epochs < 0 or self.max_steps < 0:
            raise ConfigError("epoch and step counts must be non-negative")
        _check_positive(self, "d_steps", "g_steps", "pretrain_lr", "checkpoint_every", "eval_every")
        if not 0.0 <= self.baseline_alpha < 1.0:
            raise ConfigError("baseline_alpha must be in [0, 1)")


def to_dict(cfg) -> dict:
    return asdict(cfg)


def from_dict(cls, data: dict):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**data)
