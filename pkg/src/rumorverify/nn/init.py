"""Seeded parameter initialization.

Parameter values are kept exactly float32-representable (generated in
float64, rounded through float32 once) so that the 32-bit checkpoint
payload round-trips bitwise.  All compute stays in float64.
"""

from __future__ import annotations

import math

import numpy as np


def quantize_f32(arr: np.ndarray) -> np.ndarray:
    """Round to the nearest float32 value, kept as float64."""
    return arr.astype(np.float32).astype(np.float64)


def kaiming_uniform(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Uniform fan-in initialization for a weight of shape (fan_in, fan_out)."""
    bound = math.sqrt(6.0 / shape[0])
    return quantize_f32(rng.uniform(-bound, bound, size=shape))


def zeros_init(shape: tuple[int, ...]) -> np.ndarray:
    return np.zeros(shape, dtype=np.float64)


def ones_init(shape: tuple[int, ...]) -> np.ndarray:
    return np.ones(shape, dtype=np.float64)
