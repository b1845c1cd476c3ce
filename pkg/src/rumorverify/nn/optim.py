"""Adam with global-norm gradient clipping and decoupled weight decay."""

from __future__ import annotations

import math

import numpy as np

from .engine import Tensor
from .init import quantize_f32


def clip_global_norm(params: dict[str, Tensor], threshold: float) -> float:
    """Scale all gradients in place so their global L2 norm is <= threshold.

    Returns the pre-clip norm.
    """
    total = 0.0
    for p in params.values():
        if p.grad is not None:
            total += float((p.grad ** 2).sum())
    norm = math.sqrt(total)
    if norm > threshold > 0.0:
        scale = threshold / norm
        for p in params.values():
            if p.grad is not None:
                p.grad = p.grad * scale
    return norm


class Adam:
    """Standard Adam (beta1=0.9, beta2=0.999, eps=1e-8) with bias correction.

    Weight decay is decoupled: theta <- theta - lr * decay * theta after the
    Adam update.  Updated parameters are rounded through float32 so
    checkpoints store them losslessly.
    """

    def __init__(
        self,
        params: dict[str, Tensor],
        lr: float,
        weight_decay: float = 0.0,
        clip_norm: float | None = 1.0,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.clip_norm = clip_norm
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self._v = {name: np.zeros_like(p.data) for name, p in params.items()}

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def step(self) -> None:
        self.t += 1
        if self.clip_norm is not None:
            clip_global_norm(self.params, self.clip_norm)
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, p in self.params.items():
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            m = self._m[name] = self.beta1 * self._m[name] + (1.0 - self.beta1) * g
            v = self._v[name] = self.beta2 * self._v[name] + (1.0 - self.beta2) * g ** 2
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            data = p.data - self.lr * update
            if self.weight_decay:
                data = data - self.lr * self.weight_decay * data
            p.data = quantize_f32(data)
