"""Focal loss and inverse-frequency class weighting.

The focal loss down-weights well-classified samples:

    loss = -alpha[y] * (1 - p_y)**gamma * log(p_y)

with p_y the predicted probability of the gold class, clamped below at
1e-12 before the log.  gamma = 0 recovers plain cross-entropy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .engine import Tensor, as_tensor, add_n, clip_min, log

PROB_FLOOR = 1e-12
NUM_CLASSES = 3


@dataclass
class LossConfig:
    gamma: float = 2.0
    alpha: np.ndarray | None = None  # length 3; None means unit weights
    reduction: str = "mean"

    def __post_init__(self):
        if self.gamma < 0:
            raise ConfigError(f"focusing parameter gamma must be >= 0, got {self.gamma}")
        if self.reduction not in ("mean", "sum"):
            raise ConfigError(f"reduction must be 'mean' or 'sum', got {self.reduction!r}")
        if self.alpha is not None:
            self.alpha = np.asarray(self.alpha, dtype=np.float64)
            if self.alpha.shape != (NUM_CLASSES,):
                raise ConfigError(f"alpha must have length {NUM_CLASSES}")
            if np.any(self.alpha < 0):
                raise ConfigError("alpha components must be >= 0")

    def weight(self, gold: int) -> float:
        return 1.0 if self.alpha is None else float(self.alpha[gold])


def class_weights(counts, total: int | None = None) -> np.ndarray:
    """Inverse-frequency weights: w_i = N / n_i when n_i > 0, else 0."""
    counts = np.asarray(counts, dtype=np.float64)
    n = float(counts.sum())
    if total is not None and total != n:
        raise ConfigError(f"total {total} does not match sum of counts {n:g}")
    weights = np.zeros_like(counts)
    nonzero = counts > 0
    weights[nonzero] = n / counts[nonzero]
    return weights


def focal_loss(probs, gold: int, cfg: LossConfig) -> Tensor:
    """Per-sample focal loss on a probability vector (graph-aware).

    Accepts a Tensor (keeps gradients flowing) or a plain array.
    """
    probs = as_tensor(probs)
    p = clip_min(probs[int(gold)], PROB_FLOOR)
    modulator = (1.0 - p) ** cfg.gamma
    return -(cfg.weight(int(gold)) * modulator * log(p))


def reduce_losses(losses: list[Tensor], reduction: str) -> Tensor:
    total = add_n(losses)
    if reduction == "mean":
        return total / len(losses)
    return total
