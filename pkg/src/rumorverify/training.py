"""Training loop with dev-based model selection, plus checkpoint I/O.

Checkpoint byte layout (documented contract, little-endian):

    bytes 0..7    magic b"RVCKPT01"
    bytes 8..11   uint32 header length H
    bytes 12..    H bytes of UTF-8 JSON header:
                    {"format_version": 1, "model_config": {...},
                     "loss": {"gamma", "alpha", "reduction"},
                     "seed", "step_count", "best_epoch",
                     "best_dev_macro_f1",
                     "params": [{"name": str, "shape": [int, ...]}, ...]}
    rest          concatenated row-major float32 payloads, one per
                  header entry, in header order

Parameter values are maintained exactly float32-representable (see
nn.init), so the payload round-trips bitwise.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import CheckpointError, ConfigError, NumericsError, TrainingDivergedError
from .evaluate import macro_f1
from .model import ModelConfig, forward_thread, init_params, param_shapes
from .nn.engine import Tensor
from .nn.losses import LossConfig, class_weights, focal_loss, reduce_losses
from .nn.optim import Adam
from .threads import Thread, VeracityLabel

_MAGIC = b"RVCKPT01"


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 3e-4
    weight_decay: float = 5e-6
    clip_norm: float | None = 1.0
    batch_size: int = 16
    epochs: int = 100
    seed: int = 7

    def __post_init__(self):
        if self.learning_rate < 0 or self.weight_decay < 0:
            raise ConfigError("learning_rate and weight_decay must be >= 0")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ConfigError("clip_norm must be positive (or None to disable)")
        if self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("batch_size and epochs must be >= 1")


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    train_loss: float
    dev_macro_f1: float


@dataclass
class TrainedModel:
    """Best-on-dev parameter snapshot plus enough metadata to reproduce it."""

    params: dict[str, np.ndarray]
    model_cfg: ModelConfig
    loss_cfg: LossConfig
    seed: int
    step_count: int
    best_epoch: int
    best_dev_macro_f1: float

    def param_tensors(self) -> dict[str, Tensor]:
        return {name: Tensor(arr) for name, arr in self.params.items()}

    def predict_proba(self, thread: Thread, provider) -> np.ndarray:
        out = forward_thread(thread, provider, self.param_tensors(), self.model_cfg, train=False)
        return out.data

    def predict(self, thread: Thread, provider) -> VeracityLabel:
        return VeracityLabel(int(np.argmax(self.predict_proba(thread, provider))))


def train(
    train_threads: list[Thread],
    dev_threads: list[Thread],
    provider,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    loss_cfg: LossConfig | None = None,
    initial_params: dict[str, Tensor] | None = None,
) -> tuple[TrainedModel, list[EpochLog]]:
    """Run the full training loop and return the best-on-dev model.

    Class weights default to inverse frequency computed from the training
    split only.  Shuffling and dropout draw from separate seeded streams;
    two runs with identical seed, config, and data are bitwise identical.
    """
    if not train_threads or not dev_threads:
        raise ConfigError("train and dev splits must be non-empty")
    if loss_cfg is None:
        loss_cfg = LossConfig()
    if loss_cfg.alpha is None:
        counts = np.zeros(3)
        for t in train_threads:
            counts[t.veracity.value] += 1
        loss_cfg = LossConfig(
            gamma=loss_cfg.gamma, alpha=class_weights(counts), reduction=loss_cfg.reduction
        )

    params = initial_params if initial_params is not None else init_params(model_cfg, train_cfg.seed)
    shuffle_seq, dropout_seq = np.random.SeedSequence(train_cfg.seed).spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_seq)
    dropout_rng = np.random.default_rng(dropout_seq)
    opt = Adam(
        params,
        lr=train_cfg.learning_rate,
        weight_decay=train_cfg.weight_decay,
        clip_norm=train_cfg.clip_norm,
    )

    n = len(train_threads)
    logs: list[EpochLog] = []
    best_snapshot: dict[str, np.ndarray] | None = None
    best_f1 = -1.0
    best_epoch = 0

    for epoch in range(1, train_cfg.epochs + 1):
        order = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        for batch_idx, start in enumerate(range(0, n, train_cfg.batch_size)):
            batch = order[start:start + train_cfg.batch_size]
            opt.zero_grad()
            try:
                losses = []
                for i in batch:
                    thread = train_threads[int(i)]
                    probs = forward_thread(
                        thread, provider, params, model_cfg, train=True, rng=dropout_rng
                    )
                    losses.append(focal_loss(probs, thread.veracity.value, loss_cfg))
                batch_loss = reduce_losses(losses, loss_cfg.reduction)
                value = float(batch_loss.data)
                if not math.isfinite(value):
                    raise NumericsError("non-finite batch loss")
            except NumericsError as exc:
                norms = {name: float(np.linalg.norm(p.data)) for name, p in params.items()}
                raise TrainingDivergedError(
                    f"training diverged at epoch {epoch} batch {batch_idx}: {exc}",
                    epoch=epoch,
                    batch=batch_idx,
                    param_norms=norms,
                ) from exc
            batch_loss.backward()
            opt.step()
            epoch_loss += value * (len(batch) if loss_cfg.reduction == "mean" else 1.0)

        train_loss = epoch_loss / n if loss_cfg.reduction == "mean" else epoch_loss
        gold = [t.veracity for t in dev_threads]
        pred = []
        for t in dev_threads:
            probs = forward_thread(t, provider, params, model_cfg, train=False)
            pred.append(VeracityLabel(int(np.argmax(probs.data))))
        dev_f1 = macro_f1(gold, pred)
        logs.append(EpochLog(epoch=epoch, train_loss=train_loss, dev_macro_f1=dev_f1))
        if best_snapshot is None or dev_f1 > best_f1:
            best_snapshot = {name: p.data.copy() for name, p in params.items()}
            best_f1 = dev_f1
            best_epoch = epoch

    model = TrainedModel(
        params=best_snapshot,
        model_cfg=model_cfg,
        loss_cfg=loss_cfg,
        seed=train_cfg.seed,
        step_count=opt.t,
        best_epoch=best_epoch,
        best_dev_macro_f1=best_f1,
    )
    return model, logs


def save_checkpoint(model: TrainedModel, path) -> None:
    """Write the documented binary checkpoint format."""
    header = {
        "format_version": 1,
        "model_config": model.model_cfg.to_dict(),
        "loss": {
            "gamma": model.loss_cfg.gamma,
            "alpha": None if model.loss_cfg.alpha is None else [float(a) for a in model.loss_cfg.alpha],
            "reduction": model.loss_cfg.reduction,
        },
        "seed": model.seed,
        "step_count": model.step_count,
        "best_epoch": model.best_epoch,
        "best_dev_macro_f1": model.best_dev_macro_f1,
        "params": [
            {"name": name, "shape": list(arr.shape)} for name, arr in model.params.items()
        ],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for arr in model.params.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path, expect_config: ModelConfig | None = None) -> TrainedModel:
    """Read a checkpoint; validates magic, shapes, and optional config echo."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(_MAGIC) + 4 or raw[: len(_MAGIC)] != _MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    offset = len(_MAGIC)
    (header_len,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    if offset + header_len > len(raw):
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(raw[offset:offset + header_len].decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header: {exc}") from exc
    offset += header_len
    if header.get("format_version") != 1:
        raise CheckpointError(f"{path}: unsupported format version {header.get('format_version')}")
    try:
        model_cfg = ModelConfig.from_dict(header["model_config"])
        loss_meta = header["loss"]
        entries = header["params"]
    except (KeyError, TypeError, ConfigError) as exc:
        raise CheckpointError(f"{path}: invalid header contents: {exc}") from exc
    if expect_config is not None and model_cfg != expect_config:
        raise CheckpointError(
            f"{path}: checkpoint config {model_cfg.to_dict()} does not match "
            f"expected {expect_config.to_dict()}"
        )
    expected = param_shapes(model_cfg)
    declared = {e["name"]: tuple(e["shape"]) for e in entries}
    if declared != expected:
        missing = set(expected) ^ set(declared)
        if missing:
            raise CheckpointError(f"{path}: parameter set mismatch: {sorted(missing)}")
        bad = [n for n in expected if declared[n] != expected[n]]
        raise CheckpointError(
            f"{path}: shape mismatch for {bad[0]!r}: header {declared[bad[0]]}, "
            f"config implies {expected[bad[0]]}"
        )
    params: dict[str, np.ndarray] = {}
    for entry in entries:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 4
        if offset + nbytes > len(raw):
            raise CheckpointError(f"{path}: truncated payload at {entry['name']!r}")
        arr = np.frombuffer(raw, dtype="<f4", count=count, offset=offset).astype(np.float64)
        params[entry["name"]] = arr.reshape(shape)
        offset += nbytes
    if offset != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - offset} trailing bytes after payload")
    alpha = loss_meta.get("alpha")
    loss_cfg = LossConfig(
        gamma=loss_meta["gamma"],
        alpha=None if alpha is None else np.asarray(alpha, dtype=np.float64),
        reduction=loss_meta["reduction"],
    )
    return TrainedModel(
        params=params,
        model_cfg=model_cfg,
        loss_cfg=loss_cfg,
        seed=header["seed"],
        step_count=header["step_count"],
        best_epoch=header["best_epoch"],
        best_dev_macro_f1=header["best_dev_macro_f1"],
    )
