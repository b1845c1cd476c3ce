"""Differentiable primitives, optimizer, and loss for the rumor model."""

from .engine import (
    Tensor,
    add_n,
    as_tensor,
    check_finite,
    clip_min,
    concat,
    dropout,
    layer_norm,
    log,
    relu,
    softmax,
    stack,
    tsum,
    zeros,
)
from .init import kaiming_uniform, ones_init, quantize_f32, zeros_init
from .losses import LossConfig, class_weights, focal_loss, reduce_losses
from .optim import Adam, clip_global_norm

__all__ = [
    "Adam",
    "LossConfig",
    "Tensor",
    "add_n",
    "as_tensor",
    "check_finite",
    "class_weights",
    "clip_global_norm",
    "clip_min",
    "concat",
    "dropout",
    "focal_loss",
    "kaiming_uniform",
    "layer_norm",
    "log",
    "ones_init",
    "quantize_f32",
    "reduce_losses",
    "relu",
    "softmax",
    "stack",
    "tsum",
    "zeros",
    "zeros_init",
]
