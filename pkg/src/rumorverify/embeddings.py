"""Per-post pooled embedding vectors: file store, hash fallback, stance injection.

Embedding file format (UTF-8, record per line):
  line 1   {"dim": int, "pooling": "mean", "max_seq_len": int, "source_model": str}
  line 2+  {"post_id": str, "vec": [float, ...]}   # exactly `dim` floats

The hash embedder makes the whole pipeline runnable with no pretrained
model: deterministic signed one-hot accumulation per token, scaled by
1/sqrt(token count).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MissingEmbeddingError, StoreError
from .threads import Post, StanceLabel

STANCE_DIM = len(StanceLabel)


@dataclass(frozen=True)
class EmbeddingHeader:
    dim: int
    pooling: str = "mean"
    max_seq_len: int = 20
    source_model: str = "unknown"

    def __post_init__(self):
        if self.dim < 1:
            raise StoreError(f"embedding dim must be >= 1, got {self.dim}")
        if self.pooling != "mean":
            raise StoreError(f"unsupported pooling {self.pooling!r} (only 'mean')")
        if self.max_seq_len < 1:
            raise StoreError(f"max_seq_len must be >= 1, got {self.max_seq_len}")


class EmbeddingStore:
    """Read-only map post_id -> pooled vector, loaded from one file."""

    def __init__(self, header: EmbeddingHeader, vectors: dict[str, np.ndarray]):
        self.header = header
        self._vectors = vectors

    @property
    def dim(self) -> int:
        return self.header.dim

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, post_id: str) -> bool:
        return post_id in self._vectors

    def post_ids(self) -> list[str]:
        return list(self._vectors)

    def get(self, post_id: str) -> np.ndarray:
        try:
            return self._vectors[post_id]
        except KeyError:
            raise MissingEmbeddingError(post_id) from None

    def vector_for(self, post: Post) -> np.ndarray:
        return self.get(post.post_id)


def open_store(path: str | Path) -> EmbeddingStore:
    """Parse an embedding file; validates dimensions and uniqueness."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise StoreError(f"{path}: missing header line")
        try:
            raw = json.loads(header_line)
            header = EmbeddingHeader(
                dim=raw["dim"],
                pooling=raw.get("pooling", "mean"),
                max_seq_len=raw.get("max_seq_len", 20),
                source_model=raw.get("source_model", "unknown"),
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise StoreError(f"{path}: invalid header: {exc}") from exc
        vectors: dict[str, np.ndarray] = {}
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                pid, vec = rec["post_id"], rec["vec"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise StoreError(f"{path}:{lineno}: invalid record: {exc}") from exc
            if pid in vectors:
                raise StoreError(f"{path}:{lineno}: duplicate post_id {pid!r}")
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (header.dim,):
                raise StoreError(
                    f"{path}:{lineno}: record {pid!r} has {arr.size} components, "
                    f"header declares dim {header.dim}"
                )
            if not np.all(np.isfinite(arr)):
                raise StoreError(f"{path}:{lineno}: record {pid!r} has non-finite components")
            arr.flags.writeable = False
            vectors[pid] = arr
    return EmbeddingStore(header, vectors)


def write_store(path: str | Path, header: EmbeddingHeader, records: list[tuple[str, np.ndarray]]) -> None:
    """Write an embedding file in the documented format."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({
            "dim": header.dim,
            "pooling": header.pooling,
            "max_seq_len": header.max_seq_len,
            "source_model": header.source_model,
        }) + "\n")
        for pid, vec in records:
            fh.write(json.dumps({"post_id": pid, "vec": [float(x) for x in vec]}) + "\n")


def _token_hash(token: str) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def hash_embed(text: str, dim: int) -> np.ndarray:
    """Deterministic fallback embedding: signed token hashing.

    Each whitespace token adds +1 or -1 (sign from the hash's top bit) at
    index hash mod dim; the sum is scaled by 1/sqrt(token count).  Empty
    text yields the zero vector.
    """
    if dim < 1:
        raise StoreError(f"embedding dim must be >= 1, got {dim}")
    vec = np.zeros(dim, dtype=np.float64)
    tokens = text.split()
    if not tokens:
        return vec
    for token in tokens:
        h = _token_hash(token)
        sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
        vec[h % dim] += sign
    return vec / math.sqrt(len(tokens))


class HashEmbedder:
    """Embedding provider computing hash_embed(post.text) on the fly."""

    def __init__(self, dim: int):
        if dim < 1:
            raise StoreError(f"embedding dim must be >= 1, got {dim}")
        self.dim = dim

    def vector_for(self, post: Post) -> np.ndarray:
        return hash_embed(post.text, self.dim)


def inject_stance(vec: np.ndarray, stance: StanceLabel) -> np.ndarray:
    """Concatenate a one-hot stance encoding onto a pooled post vector."""
    vec = np.asarray(vec, dtype=np.float64)
    out = np.zeros(vec.shape[0] + STANCE_DIM, dtype=np.float64)
    out[: vec.shape[0]] = vec
    out[vec.shape[0] + stance.value] = 1.0
    return out
