"""Stance-wise aggregation and structural covariates.

All functions here accept either plain float64 arrays or graph Tensors;
the arithmetic is identical (sequential accumulation in input order, then
one division), so the tested array path and the differentiable model path
share a single implementation.
"""

from __future__ import annotations

import numpy as np

from .errors import SchemaError
from .nn.engine import Tensor, concat as tensor_concat
from .threads import STANCE_ORDER, StanceLabel

STANCE_DIM = len(STANCE_ORDER)


def _length(vec) -> int:
    return vec.shape[0] if isinstance(vec, (Tensor, np.ndarray)) else len(vec)


def _zeros(dim: int, tensor_mode: bool):
    z = np.zeros(dim, dtype=np.float64)
    return Tensor(z) if tensor_mode else z


def _mean_in_order(vectors):
    acc = vectors[0]
    for v in vectors[1:]:
        acc = acc + v
    return acc / len(vectors)


def aggregate_by_stance(pairs, dim: int | None = None):
    """Mean the vectors of each stance category; empty stances yield zeros.

    pairs: list of (vector, StanceLabel).  Returns four vectors in the
    fixed order [S, D, Q, C].  `dim` is required when pairs is empty.
    """
    if pairs:
        first_dim = _length(pairs[0][0])
        if dim is None:
            dim = first_dim
        for vec, _ in pairs:
            if _length(vec) != dim:
                raise SchemaError(
                    f"mixed vector dimensions in aggregation: expected {dim}, got {_length(vec)}"
                )
    elif dim is None:
        raise SchemaError("aggregate_by_stance needs `dim` for an empty reply list")
    tensor_mode = any(isinstance(vec, Tensor) for vec, _ in pairs)
    groups: dict[StanceLabel, list] = {s: [] for s in STANCE_ORDER}
    for vec, stance in pairs:
        groups[stance].append(vec)
    out = []
    for stance in STANCE_ORDER:
        members = groups[stance]
        if members:
            out.append(_mean_in_order(members))
        else:
            out.append(_zeros(dim, tensor_mode))
    return out


def assemble_thread_vector(source, aggregated):
    """Concatenate [claim, S, D, Q, C] into the thread vector."""
    if len(aggregated) != STANCE_DIM:
        raise SchemaError(f"expected {STANCE_DIM} aggregated vectors, got {len(aggregated)}")
    parts = [source, *aggregated]
    dim = _length(source)
    for part in parts:
        if _length(part) != dim:
            raise SchemaError(
                f"length mismatch in thread vector assembly: expected {dim}, got {_length(part)}"
            )
    if any(isinstance(p, Tensor) for p in parts):
        return tensor_concat([p if isinstance(p, Tensor) else Tensor(p) for p in parts])
    return np.concatenate(parts)


def stance_distribution(stances: list[StanceLabel]) -> np.ndarray:
    """Normalized per-stance reply counts; zero vector when no replies."""
    counts = np.zeros(STANCE_DIM, dtype=np.float64)
    for s in stances:
        counts[s.value] += 1.0
    total = counts.sum()
    if total == 0:
        return counts
    return counts / total


def depth_one_hot(depth: int, levels: int) -> np.ndarray:
    """One-hot encode a reply depth, clipping at the top level."""
    if depth < 0:
        raise SchemaError(f"depth must be >= 0, got {depth}")
    if levels < 1:
        raise SchemaError(f"depth levels must be >= 1, got {levels}")
    vec = np.zeros(levels, dtype=np.float64)
    vec[min(depth, levels - 1)] = 1.0
    return vec


def average_depth_by_stance(pairs: list[tuple[int, StanceLabel]], levels: int) -> list[np.ndarray]:
    """Per stance, the mean of the depth one-hots of its replies.

    Returns four vectors in [S, D, Q, C] order; empty stances yield zeros.
    """
    groups: dict[StanceLabel, list[np.ndarray]] = {s: [] for s in STANCE_ORDER}
    for depth, stance in pairs:
        groups[stance].append(depth_one_hot(depth, levels))
    out = []
    for stance in STANCE_ORDER:
        members = groups[stance]
        if members:
            out.append(_mean_in_order(members))
        else:
            out.append(np.zeros(levels, dtype=np.float64))
    return out


def covariate_vector(stances: list[StanceLabel], depth_pairs: list[tuple[int, StanceLabel]], levels: int) -> np.ndarray:
    """Assemble s' = v_d || d'(S) || d'(D) || d'(Q) || d'(C)."""
    parts = [stance_distribution(stances)]
    parts.extend(average_depth_by_stance(depth_pairs, levels))
    return np.concatenate(parts)
