"""Run configuration: one YAML file, flag overrides, grid expansion.

Every key has a default matching the training setup (batch 16, 100 epochs,
lr 3e-4, weight decay 5e-6, clip 1.0, dropout 0.5, 4 heads).  Unknown keys
are rejected so typos never silently fall back to defaults.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, fields, asdict
from pathlib import Path

import yaml

from .errors import ConfigError
from .model import ModelConfig
from .nn.losses import LossConfig
from .training import TrainConfig

OUTPUT_DIR_ENV = "RUMORVERIFY_OUTDIR"


@dataclass
class RunConfig:
    # data
    train_path: str | None = None
    dev_path: str | None = None
    test_path: str | None = None
    missing_stance: str = "reject"  # or "comment"
    # embeddings: a store file, or the hash fallback when unset
    embedding_store: str | None = None
    hash_dim: int = 64
    # model
    depth_levels: int = 24
    semantic_hidden: int = 64
    classifier_hidden: int = 64
    d_model: int = 32
    heads: int = 4
    covariate_attention: str = "tokens"
    dropout: float = 0.5
    # optimization
    learning_rate: float = 3e-4
    weight_decay: float = 5e-6
    clip_norm: float | None = 1.0
    batch_size: int = 16
    epochs: int = 100
    # loss
    gamma: float = 2.0
    reduction: str = "mean"
    # misc
    seed: int = 7
    output_dir: str | None = None
    emoji_table: str | None = None
    early_checkpoints: tuple = (1, 4, 7, 10, 13, 16, 19, 22, 24)
    cross_platform_pairs: tuple | None = None  # None = all ordered combos

    def resolved_output_dir(self) -> Path:
        if self.output_dir:
            return Path(self.output_dir)
        return Path(os.environ.get(OUTPUT_DIR_ENV, "runs"))

    def model_config(self, embed_dim: int) -> ModelConfig:
        return ModelConfig(
            embed_dim=embed_dim,
            depth_levels=self.depth_levels,
            semantic_hidden=self.semantic_hidden,
            classifier_hidden=self.classifier_hidden,
            d_model=self.d_model,
            heads=self.heads,
            covariate_attention=self.covariate_attention,
            dropout=self.dropout,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            clip_norm=self.clip_norm,
            batch_size=self.batch_size,
            epochs=self.epochs,
            seed=self.seed,
        )

    def loss_config(self) -> LossConfig:
        return LossConfig(gamma=self.gamma, alpha=None, reduction=self.reduction)

    def to_dict(self) -> dict:
        obj = asdict(self)
        obj["early_checkpoints"] = list(self.early_checkpoints)
        if self.cross_platform_pairs is not None:
            obj["cross_platform_pairs"] = [list(p) for p in self.cross_platform_pairs]
        return obj


_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def _coerce(name: str, value):
    if name == "early_checkpoints":
        if not isinstance(value, (list, tuple)):
            raise ConfigError("early_checkpoints must be a list of hours")
        return tuple(float(v) for v in value)
    if name == "cross_platform_pairs":
        if value is None:
            return None
        return tuple((str(a), str(b)) for a, b in value)
    return value


def build_config(values: dict) -> RunConfig:
    """Build a RunConfig from a mapping, rejecting unknown keys."""
    unknown = set(values) - _FIELD_NAMES - {"grid"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {k: _coerce(k, v) for k, v in values.items() if k != "grid"}
    try:
        return RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path: str | Path | None, overrides: list[str] | None = None) -> tuple[RunConfig, dict | None]:
    """Read a YAML config file and apply `key=value` overrides (flags win).

    Returns (config, grid) where grid is the optional key -> list-of-values
    mapping used for sweep expansion.
    """
    values: dict = {}
    if path is not None:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a mapping")
        values.update(raw)
    grid = values.pop("grid", None)
    if grid is not None:
        if not isinstance(grid, dict):
            raise ConfigError("grid must map config keys to lists of values")
        unknown = set(grid) - _FIELD_NAMES
        if unknown:
            raise ConfigError(f"unknown grid keys: {sorted(unknown)}")
        for key, options in grid.items():
            if not isinstance(options, list) or not options:
                raise ConfigError(f"grid key {key!r} must map to a non-empty list")
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key=value")
        key, _, raw_value = item.partition("=")
        key = key.strip()
        if key not in _FIELD_NAMES:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = yaml.safe_load(raw_value)
    return build_config(values), grid


def expand_grid(base: RunConfig, grid: dict) -> list[tuple[str, RunConfig]]:
    """Cartesian-product expansion of a grid into named run configs."""
    keys = sorted(grid)
    combos = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        values = base.to_dict()
        name_bits = []
        for key, value in zip(keys, combo):
            values[key] = value
            name_bits.append(f"{key}={value}")
        combos.append(("__".join(name_bits), build_config(values)))
    return combos


def write_config_echo(cfg: RunConfig, path: str | Path) -> None:
    """Record every effective config value for reproducibility."""
    Path(path).write_text(
        yaml.safe_dump(cfg.to_dict(), sort_keys=True, default_flow_style=False),
        encoding="utf-8",
    )
