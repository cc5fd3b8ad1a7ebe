"""Maximum-likelihood warm start and the adversarial training loop.

Every random draw is keyed by (seed, step, stream name), so a step depends
only on the parameters going into it. That is what makes a run resumed from
a checkpoint retrace the uninterrupted run exactly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from ..neural import checkpoint as ckpt
from ..neural.functional import DivergenceError
from ..neural.params import adam_update, clip_gradients
from ..neural.rng import rng_for
from . import objectives as obj
from .config import DiscriminatorConfig, GeneratorConfig, TrainConfig, from_dict, to_dict
from .models import Discriminator, Generator, SampleBatch, length_mask, shift_right

log = logging.getLogger(__name__)

CHECKPOINT_KIND = "bpemolgan"


def _taken(logp: np.ndarray, targets: np.ndarray) -> np.ndarray:
    return np.take_along_axis(logp, targets[..., None], axis=-1)[..., 0]


def _dlogits(logp: np.ndarray, targets: np.ndarray, dtaken: np.ndarray) -> np.ndarray:
    """Backprop dL/d(log p[target]) through log-softmax to the logits."""
    d = -np.exp(logp) * dtaken[..., None]
    np.put_along_axis(d, targets[..., None], _taken(d, targets)[..., None] + dtaken[..., None], axis=-1)
    return d


def _crop(lengths: np.ndarray) -> int:
    return max(int(lengths.max(initial=1)), 1)


# maximum likelihood


def mle_step(gen: Generator, ids: np.ndarray, lengths: np.ndarray, lr: float, seed: int, step: int) -> float:
    """One teacher-forced cross-entropy update on a batch; returns the pre-update loss."""
    Tb = _crop(lengths)
    targets = ids[:, :Tb]
    mask = length_mask(lengths, Tb)
    n = len(ids)
    z = gen.noise(n, seed, step, "mle.noise")
    masks = gen.dropout_masks(n, Tb, seed, step, "mle") if gen.cfg.dropout else None
    logp, cache = gen.forward(z, shift_right(targets), masks)
    taken = _taken(logp, targets)
    loss = obj.mle_loss(taken, mask)
    if not np.isfinite(loss):
        raise DivergenceError(f"non-finite pretraining loss at step {step}")
    store = gen.store
    store.zero_grad()
    gen.backward(_dlogits(logp, targets, np.where(mask, -1.0 / mask.sum(), 0.0)), cache)
    clip_gradients(store, -gen.cfg.grad_clip, gen.cfg.grad_clip)
    adam_update(store, lr=lr)
    return loss


def mle_pretrain(
    gen: Generator,
    ids: np.ndarray,
    lengths: np.ndarray,
    epochs: int,
    batch_size: int,
    lr: float,
    seed: int = 0,
    on_epoch: Callable[[int, float], None] | None = None,
) -> list[float]:
    """Shuffled minibatch MLE; returns the mean training loss of each epoch.

    The optimizer moments are reset afterwards because the adversarial phase
    runs at a different learning rate.
    """
    history = []
    n = len(ids)
    step = 0
    for epoch in range(epochs):
        order = rng_for(seed, epoch, "mle.shuffle").permutation(n)
        losses, weights = [], []
        for lo in range(0, n, batch_size):
            idx = order[lo : lo + batch_size]
            losses.append(mle_step(gen, ids[idx], lengths[idx], lr, seed, step))
            weights.append(lengths[idx].sum())
            step += 1
        mean = float(np.average(losses, weights=weights))
        history.append(mean)
        log.info("pretrain epoch %d: cross-entropy %.4f", epoch + 1, mean)
        if on_epoch is not None:
            on_epoch(epoch + 1, mean)
    if epochs:
        gen.store.reset_optimizer()
    return history


# adversarial loop


@dataclass
class StepRecord:
    step: int
    d_loss: float
    g_loss: float
    baseline: float
    mean_reward: float
    reward_min: float
    reward_max: float
    extra: dict = field(default_factory=dict)


class Trainer:
    """Holds both models, the baseline and the step counter."""

    def __init__(
        self,
        gen_cfg: GeneratorConfig,
        disc_cfg: DiscriminatorConfig,
        train_cfg: TrainConfig,
        real_ids: np.ndarray,
        real_lengths: np.ndarray,
        generator: Generator | None = None,
        discriminator: Discriminator | None = None,
        step: int = 0,
        baseline: float = 0.0,
        pretrained: bool = False,
        reward_bounds: tuple[float, float] | None = None,
    ):
        if gen_cfg.vocab_size != disc_cfg.vocab_size:
            raise ValueError("generator and discriminator vocabulary sizes differ")
        if len(real_ids) == 0:
            raise ValueError("empty training corpus")
        self.gen_cfg, self.disc_cfg, self.cfg = gen_cfg, disc_cfg, train_cfg
        self.real_ids = np.asarray(real_ids)
        self.real_lengths = np.asarray(real_lengths)
        self.gen = generator or Generator(gen_cfg, seed=train_cfg.seed)
        self.disc = discriminator or Discriminator(disc_cfg, seed=train_cfg.seed)
        self.step = step
        self.baseline = baseline
        self.pretrained = pretrained
        # smallest and largest per-token reward over every adversarial step so far
        self.reward_bounds = None if reward_bounds is None else tuple(reward_bounds)

    @property
    def seed(self) -> int:
        return self.cfg.seed

    def pretrain(self, on_epoch=None) -> list[float]:
        if self.pretrained:
            return []
        hist = mle_pretrain(
            self.gen, self.real_ids, self.real_lengths, self.cfg.pretrain_epochs,
            self.cfg.batch_size, self.cfg.pretrain_lr, self.seed, on_epoch,
        )
        self.pretrained = True
        return hist

    def _real_batch(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        n, N = len(self.real_ids), self.cfg.batch_size
        rng = rng_for(self.seed, self.step, f"real.batch.{k}")
        idx = rng.choice(n, N, replace=N > n)
        return self.real_ids[idx], self.real_lengths[idx]

    def discriminator_step(self, fake: SampleBatch, k: int = 0) -> float:
        """One update on a real batch plus ``fake``; returns the pre-update loss."""
        disc = self.disc
        real_ids, real_len = self._real_batch(k)
        batches = []
        for tag, ids, lens, target in (("real", real_ids, real_len, 1), ("fake", fake.tokens, fake.lengths, 0)):
            Tb = _crop(lens)
            ids = ids[:, :Tb]
            drop = disc.dropout_mask(len(ids), Tb, self.seed, self.step, f"disc.drop.{tag}.{k}")
            probs, cache = disc.forward(ids, lens, drop)
            batches.append((probs, length_mask(lens, Tb), target, cache))
        (pr, mr, _, _), (pf, mf, _, _) = batches
        loss = obj.discriminator_loss(pr, mr, pf, mf, self.disc_cfg.l2_coefficient, disc.store.sq_norm())
        if not np.isfinite(loss):
            raise DivergenceError(f"non-finite discriminator loss at step {self.step}")
        n_tokens = mr.sum() + mf.sum()
        disc.store.zero_grad()
        for probs, mask, target, cache in batches:
            disc.backward(obj.bce_logit_grad(probs, mask, target, 1.0 / n_tokens), cache)
        clip_gradients(disc.store, -self.disc_cfg.grad_clip, self.disc_cfg.grad_clip)
        adam_update(disc.store, lr=self.disc_cfg.learning_rate, weight_decay=self.disc_cfg.l2_coefficient)
        return loss

    def generator_step(self, fake: SampleBatch) -> tuple[float, obj.RewardMatrix]:
        """Reward the fakes with the current discriminator and take a policy-gradient step."""
        gen = self.gen
        Tb = _crop(fake.lengths)
        tokens = fake.tokens[:, :Tb]
        mask = length_mask(fake.lengths, Tb)
        scores = self.disc.score(tokens, fake.lengths)
        rewards = obj.compute_rewards(scores, mask)
        self.baseline = obj.update_baseline(self.baseline, rewards.mean(), self.cfg.baseline_alpha)
        masks = None if fake.masks is None else tuple(m[:, :Tb] for m in fake.masks)
        logp, cache = gen.forward(fake.noise, shift_right(tokens), masks)
        taken = _taken(logp, tokens)
        loss = obj.generator_loss(taken, rewards, self.baseline)
        if not np.isfinite(loss):
            raise DivergenceError(f"non-finite generator loss at step {self.step}")
        gen.store.zero_grad()
        gen.backward(_dlogits(logp, tokens, obj.generator_loss_grad(rewards, self.baseline)), cache)
        clip_gradients(gen.store, -self.gen_cfg.grad_clip, self.gen_cfg.grad_clip)
        adam_update(gen.store, lr=self.gen_cfg.learning_rate)
        return loss, rewards

    def adversarial_step(self) -> StepRecord:
        N = self.cfg.batch_size
        fake = self.gen.sample(N, self.seed, self.step, training=True, stream="adv.gen.0")
        d_loss = 0.0
        for k in range(self.cfg.d_steps):
            d_loss = self.discriminator_step(fake, k)
        bounds = []
        for k in range(self.cfg.g_steps):
            if k:
                fake = self.gen.sample(N, self.seed, self.step, training=True, stream=f"adv.gen.{k}")
            g_loss, rewards = self.generator_step(fake)
            mean = rewards.mean()
            bounds.append(rewards.bounds())
        self.step += 1
        lo, hi = min(b[0] for b in bounds), max(b[1] for b in bounds)
        prev = self.reward_bounds or (lo, hi)
        self.reward_bounds = (min(lo, prev[0]), max(hi, prev[1]))
        return StepRecord(self.step, d_loss, g_loss, self.baseline, mean, lo, hi)

    # persistence

    def meta(self) -> dict:
        return {
            "kind": CHECKPOINT_KIND,
            "step": self.step,
            "baseline": self.baseline,
            "pretrained": self.pretrained,
            "reward_bounds": None if self.reward_bounds is None else list(self.reward_bounds),
            "generator": to_dict(self.gen_cfg),
            "discriminator": to_dict(self.disc_cfg),
            "train": to_dict(self.cfg),
        }

    def save(self, path: str | Path, extra_meta: dict | None = None) -> str:
        """Round state to float32 precision and write it; returns the file's sha256."""
        self.gen.store.quantize()
        self.disc.store.quantize()
        meta = self.meta()
        meta.update(extra_meta or {})
        return ckpt.save(path, {"generator": self.gen.store, "discriminator": self.disc.store}, meta)

    @classmethod
    def load(cls, path: str | Path, real_ids, real_lengths, train_cfg: TrainConfig | None = None) -> Trainer:
        stores, meta = ckpt.load(path)
        if meta.get("kind") != CHECKPOINT_KIND:
            raise ckpt.CheckpointError("checkpoint was not written by the GAN trainer")
        gcfg = from_dict(GeneratorConfig, meta["generator"])
        dcfg = from_dict(DiscriminatorConfig, meta["discriminator"])
        tcfg = train_cfg or from_dict(TrainConfig, meta["train"])
        return cls(
            gcfg, dcfg, tcfg, real_ids, real_lengths,
            Generator(gcfg, stores["generator"]), Discriminator(dcfg, stores["discriminator"]),
            step=meta["step"], baseline=meta["baseline"], pretrained=meta["pretrained"],
            reward_bounds=meta.get("reward_bounds"),
        )


def load_generator(path: str | Path) -> tuple[Generator, dict]:
    stores, meta = ckpt.load(path)
    if meta.get("kind") != CHECKPOINT_KIND:
        raise ckpt.CheckpointError("checkpoint was not written by the GAN trainer")
    return Generator(from_dict(GeneratorConfig, meta["generator"]), stores["generator"]), meta


def checkpoint_path(directory: str | Path, step: int) -> Path:
    return Path(directory) / f"step_{step:06d}.ckpt"


def train(
    trainer: Trainer,
    checkpoint_dir: str | Path | None = None,
    evaluate: Callable[[Trainer], dict] | None = None,
    callbacks: tuple[Callable[[Trainer, StepRecord], None], ...] = (),
    extra_meta: dict | None = None,
) -> Iterator[StepRecord]:
    """Run adversarial steps until ``max_steps``, yielding one record per step.

    ``evaluate`` runs every ``eval_every`` steps and its result lands in
    ``record.extra``. Callbacks run before the step's checkpoint is written,
    so anything they log is never behind the newest checkpoint. Checkpoints
    go to ``checkpoint_dir`` every ``checkpoint_every`` steps and after the
    final one. A divergence raises
    out of the loop; the last checkpoint on disk is the last good state.
    """
    cfg = trainer.cfg
    while trainer.step < cfg.max_steps:
        rec = trainer.adversarial_step()
        if evaluate is not None and (rec.step % cfg.eval_every == 0 or rec.step == cfg.max_steps):
            rec.extra.update(evaluate(trainer))
        for cb in callbacks:
            cb(trainer, rec)
        if checkpoint_dir is not None and (rec.step % cfg.checkpoint_every == 0 or rec.step == cfg.max_steps):
            trainer.save(checkpoint_path(checkpoint_dir, rec.step), extra_meta)
        yield rec
