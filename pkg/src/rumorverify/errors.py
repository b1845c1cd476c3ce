"""Exception hierarchy shared across the package.

Every error carries a short machine-readable class name used by the CLI
for its one-line failure output.
"""

from __future__ import annotations


class RumorVerifyError(Exception):
    """Base class for all package errors."""

    error_class = "error"


class SchemaError(RumorVerifyError):
    """Input file violates the normalized thread / embedding schema."""

    error_class = "schema"


class ConfigError(RumorVerifyError):
    """Invalid, unknown, or inconsistent configuration."""

    error_class = "config"


class StoreError(RumorVerifyError):
    """Embedding store is malformed or a lookup failed."""

    error_class = "store"


class MissingEmbeddingError(StoreError):
    """A post has no vector in the store."""

    error_class = "missing-embedding"

    def __init__(self, post_id: str):
        super().__init__(f"no embedding for post_id {post_id!r}")
        self.post_id = post_id


class CheckpointError(RumorVerifyError):
    """Checkpoint file is corrupt or incompatible with the config."""

    error_class = "checkpoint"


class NumericsError(RumorVerifyError):
    """A non-finite value surfaced during a forward or backward pass."""

    error_class = "numerics"


class TrainingDivergedError(NumericsError):
    """Training aborted on a non-finite loss; carries diagnostics."""

    error_class = "training-diverged"

    def __init__(self, message: str, epoch: int, batch: int, param_norms: dict[str, float]):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
        self.param_norms = param_norms


class EvaluationError(RumorVerifyError):
    """Evaluation protocol preconditions not met."""

    error_class = "evaluation"
