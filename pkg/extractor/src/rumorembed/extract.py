"""Pooled post embeddings from a pretrained bidirectional encoder.

Reads the normalized thread file format (one JSON object per line, posts
under "posts") and writes the embedding store format consumed by the
verification pipeline:

  line 1   {"dim": int, "pooling": "mean", "max_seq_len": int, "source_model": str}
  line 2+  {"post_id": str, "vec": [float, ...]}

Vectors are the mean of the final-layer hidden states over non-special,
non-padding token positions, truncated at max_seq_len.  A post whose text
tokenizes to nothing (empty string after normalization) falls back to the
leading special-token vector with a warning.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import torch
from transformers import AutoModel, AutoTokenizer

logger = logging.getLogger(__name__)


@dataclass
class ExtractorConfig:
    model_name: str = "bert-base-uncased"
    max_seq_len: int = 20
    pooling: str = "mean"
    batch_size: int = 32

    def __post_init__(self):
        if self.pooling != "mean":
            raise ValueError(f"only mean pooling is supported, got {self.pooling!r}")
        if self.max_seq_len < 2:
            raise ValueError(f"max_seq_len must be >= 2, got {self.max_seq_len}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def read_posts(threads_path: str | Path) -> list[tuple[str, str]]:
    """Collect (post_id, text) pairs from a normalized thread file.

    Record order follows the input.  A post_id repeated with identical text
    is emitted once; conflicting texts for one id are an error.
    """
    seen: dict[str, str] = {}
    ordered: list[tuple[str, str]] = []
    with Path(threads_path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                posts = record["posts"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{threads_path}:{lineno}: invalid thread record: {exc}") from exc
            for post in posts:
                pid, text = post["post_id"], post["text"]
                if pid in seen:
                    if seen[pid] != text:
                        raise ValueError(
                            f"{threads_path}: post_id {pid!r} repeats with different text"
                        )
                    continue
                seen[pid] = text
                ordered.append((pid, text))
    return ordered


class Embedder:
    """Wraps one loaded encoder; deterministic inference-mode pooling."""

    def __init__(self, cfg: ExtractorConfig):
        self.cfg = cfg
        self.tokenizer = AutoTokenizer.from_pretrained(cfg.model_name)
        self.model = AutoModel.from_pretrained(cfg.model_name)
        self.model.eval()

    @property
    def dim(self) -> int:
        return int(self.model.config.hidden_size)

    def embed_texts(self, texts: list[str]) -> list[list[float]]:
        vectors: list[list[float]] = []
        for start in range(0, len(texts), self.cfg.batch_size):
            batch = texts[start:start + self.cfg.batch_size]
            vectors.extend(self._embed_batch(batch))
        return vectors

    def _embed_batch(self, texts: list[str]) -> list[list[float]]:
        enc = self.tokenizer(
            texts,
            padding=True,
            truncation=True,
            max_length=self.cfg.max_seq_len,
            return_special_tokens_mask=True,
            return_tensors="pt",
        )
        special = enc.pop("special_tokens_mask")
        with torch.no_grad():
            hidden = self.model(**enc).last_hidden_state
        content = (enc["attention_mask"] * (1 - special)).unsqueeze(-1).to(hidden.dtype)
        counts = content.sum(dim=1)
        pooled = (hidden * content).sum(dim=1) / counts.clamp(min=1.0)
        out = []
        for row in range(hidden.shape[0]):
            if counts[row, 0].item() == 0:
                logger.warning(
                    "post with no content tokens after truncation; "
                    "falling back to the leading special-token vector"
                )
                out.append(hidden[row, 0].tolist())
            else:
                out.append(pooled[row].tolist())
        return out


def extract(threads_path: str | Path, output_path: str | Path, cfg: ExtractorConfig) -> int:
    """Embed every post of a thread file into an embedding store file.

    Returns the number of records written.
    """
    posts = read_posts(threads_path)
    embedder = Embedder(cfg)
    vectors = embedder.embed_texts([text for _, text in posts])
    header = {
        "dim": embedder.dim,
        "pooling": cfg.pooling,
        "max_seq_len": cfg.max_seq_len,
        "source_model": cfg.model_name,
    }
    with Path(output_path).open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for (pid, _), vec in zip(posts, vectors):
            fh.write(json.dumps({"post_id": pid, "vec": vec}) + "\n")
    return len(posts)
