"""Token-level GAN: models, objectives and the training loop."""

from .config import ConfigError, DiscriminatorConfig, GeneratorConfig, TrainConfig
from .models import Discriminator, Generator, SampleBatch
from .objectives import (
    RewardMatrix,
    compute_rewards,
    discriminator_loss,
    generator_loss,
    update_baseline,
)
from .training import StepRecord, Trainer, load_generator, mle_pretrain, train

__all__ = [
    "ConfigError",
    "Discriminator",
    "DiscriminatorConfig",
    "Generator",
    "GeneratorConfig",
    "RewardMatrix",
    "SampleBatch",
    "StepRecord",
    "TrainConfig",
    "Trainer",
    "compute_rewards",
    "discriminator_loss",
    "generator_loss",
    "load_generator",
    "mle_pretrain",
    "train",
    "update_baseline",
]
