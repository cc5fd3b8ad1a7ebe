"""Adversarial objectives: per-token BCE, rewards, EMA baseline, policy-gradient loss.

All functions take full (B, T) arrays plus a boolean mask; masked entries are
excluded with ``np.where`` so whatever sits in padding never leaks into a sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROB_CLAMP = 1e-7
BASELINE_ALPHA = 0.9


@dataclass
class RewardMatrix:
    rewards: np.ndarray  # (B, T), 0 where masked
    mask: np.ndarray  # (B, T) bool, True for positions t < T_n

    def mean(self) -> float:
        n = self.mask.sum()
        return float(np.where(self.mask, self.rewards, 0.0).sum() / n) if n else 0.0

    def bounds(self) -> tuple[float, float]:
        vals = self.rewards[self.mask]
        return (float(vals.min()), float(vals.max())) if vals.size else (0.0, 0.0)


def _clamped(p: np.ndarray) -> np.ndarray:
    return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)


def bce_sum(probs: np.ndarray, mask: np.ndarray, target: float) -> float:
    """Sum over unmasked tokens of -log p (target 1) or -log(1-p) (target 0)."""
    p = _clamped(probs)
    terms = -np.log(p) if target == 1 else -np.log1p(-p)
    return float(np.where(mask, terms, 0.0).sum())


def bce_logit_grad(probs: np.ndarray, mask: np.ndarray, target: float, scale: float) -> np.ndarray:
    """d(scale * bce_sum)/d(logit); zero where the probability was clamped."""
    inside = (probs > PROB_CLAMP) & (probs < 1.0 - PROB_CLAMP)
    return np.where(mask & inside, (probs - target) * scale, 0.0)


def discriminator_loss(
    real_scores: np.ndarray,
    real_mask: np.ndarray,
    fake_scores: np.ndarray,
    fake_mask: np.ndarray,
    l2_coefficient: float = 0.0,
    param_sq_norm: float = 0.0,
) -> float:
    """Token-averaged BCE over real (label 1) and generated (label 0) tokens, plus L2.

    The L2 term is 0.5 * l2 * ||phi||^2, whose gradient l2 * phi is what
    ``adam_update(weight_decay=l2)`` adds.
    """
    n = real_mask.sum() + fake_mask.sum()
    bce = (bce_sum(real_scores, real_mask, 1) + bce_sum(fake_scores, fake_mask, 0)) / n
    return float(bce + 0.5 * l2_coefficient * param_sq_norm)


def compute_rewards(fake_scores: np.ndarray, mask: np.ndarray) -> RewardMatrix:
    """Per-token reward 2 r_t - 1 from the discriminator's score of each generated token."""
    return RewardMatrix(np.where(mask, 2.0 * fake_scores - 1.0, 0.0), mask.astype(bool))


def update_baseline(b_prev: float, batch_mean_reward: float, alpha: float = BASELINE_ALPHA) -> float:
    return alpha * b_prev + (1.0 - alpha) * batch_mean_reward


def generator_loss(log_probs: np.ndarray, rewards: RewardMatrix, baseline: float) -> float:
    """-sum (R - b) log p over emitted tokens, divided by the total token count."""
    m = rewards.mask
    adv = np.where(m, rewards.rewards - baseline, 0.0)
    total = (adv * np.where(m, log_probs, 0.0)).sum()
    return float(-total / m.sum())


def generator_loss_grad(rewards: RewardMatrix, baseline: float) -> np.ndarray:
    """dLoss/d(log p of each emitted token), shape (B, T)."""
    m = rewards.mask
    return np.where(m, -(rewards.rewards - baseline) / m.sum(), 0.0)


def mle_loss(log_probs_taken: np.ndarray, mask: np.ndarray) -> float:
    """Mean next-token cross-entropy over unmasked positions."""
    return float(-np.where(mask, log_probs_taken, 0.0).sum() / mask.sum())
