"""Shared builders and the finite-difference gradient checker."""

from __future__ import annotations

import numpy as np

from rumorverify.threads import Post, StanceLabel, Thread, VeracityLabel

STANCES = list(StanceLabel)
VERACITIES = list(VeracityLabel)


def make_thread(thread_id="t0", n_replies=3, stances=None, timestamps=None,
                parents=None, veracity=VeracityLabel.T, event="ev", platform="twitter",
                source_ts=1000):
    """Small hand-wired thread; replies default to a flat star under the source."""
    source = Post("src", None, f"source text {thread_id}", source_ts, StanceLabel.S)
    replies = []
    for i in range(n_replies):
        stance = stances[i] if stances else STANCES[i % 4]
        ts = timestamps[i] if timestamps else (source_ts + 60 * (i + 1))
        parent = parents[i] if parents else "src"
        replies.append(Post(f"r{i}", parent, f"reply {i} of {thread_id}", ts, stance))
    return Thread(thread_id=thread_id, source=source, replies=tuple(replies),
                  veracity=veracity, event=event, platform=platform)


def random_thread(rng: np.random.Generator, thread_id: str, max_replies=8,
                  event="ev", platform="twitter", within_hours=24.0):
    """Random tree-shaped thread with timestamps inside the given window."""
    source_ts = 1_000_000
    source = Post("src", None, f"claim {thread_id}", source_ts, StanceLabel.S)
    n = int(rng.integers(0, max_replies + 1))
    ids = ["src"]
    replies = []
    offsets = np.sort(rng.uniform(1.0, within_hours * 3600.0 - 1.0, size=n))
    for i in range(n):
        parent = ids[int(rng.integers(0, len(ids)))]
        stance = STANCES[int(rng.integers(0, 4))]
        pid = f"{thread_id}_r{i}"
        replies.append(Post(pid, parent, f"reply {i} {thread_id}", source_ts + int(offsets[i]), stance))
        ids.append(pid)
    veracity = VERACITIES[int(rng.integers(0, 3))]
    return Thread(thread_id=thread_id, source=source, replies=tuple(replies),
                  veracity=veracity, event=event, platform=platform)


_VOCAB = [
    "breaking", "confirmed", "hoax", "fake", "police", "official", "report",
    "shooting", "fire", "rescue", "sources", "deny", "true", "witness",
    "photo", "video", "claim", "rumor", "spread", "share",
]


def synthetic_corpus(rng: np.random.Generator, n_threads: int, event_count: int = 3,
                     platform: str = "twitter") -> list[Thread]:
    """Threads whose veracity is a deterministic function of the stance counts:
    strict majority D -> F, strict majority S -> T, anything else -> U."""
    threads = []
    for idx in range(n_threads):
        n_replies = int(rng.integers(3, 9))
        kind = idx % 3
        if kind == 0:
            majority = StanceLabel.D
        elif kind == 1:
            majority = StanceLabel.S
        else:
            majority = STANCES[int(rng.integers(2, 4))]  # Q or C majority -> U
        k = n_replies // 2 + 1
        stances = [majority] * k
        others = [s for s in STANCES if s is not majority]
        stances += [others[int(rng.integers(0, 3))] for _ in range(n_replies - k)]
        rng.shuffle(stances)
        counts = {s: stances.count(s) for s in STANCES}
        rest_max_d = max(v for s, v in counts.items() if s is not StanceLabel.D)
        rest_max_s = max(v for s, v in counts.items() if s is not StanceLabel.S)
        if counts[StanceLabel.D] > rest_max_d:
            veracity = VeracityLabel.F
        elif counts[StanceLabel.S] > rest_max_s:
            veracity = VeracityLabel.T
        else:
            veracity = VeracityLabel.U
        source_ts = 1_000_000 + idx
        text = " ".join(_VOCAB[int(rng.integers(0, len(_VOCAB)))] for _ in range(6))
        source = Post(f"t{idx}_src", None, text, source_ts, StanceLabel.S)
        replies = []
        for j, stance in enumerate(stances):
            words = " ".join(_VOCAB[int(rng.integers(0, len(_VOCAB)))] for _ in range(5))
            replies.append(Post(f"t{idx}_r{j}", f"t{idx}_src", words,
                                source_ts + 60 * (j + 1), stance))
        threads.append(Thread(
            thread_id=f"t{idx}", source=source, replies=tuple(replies),
            veracity=veracity, event=f"event{idx % event_count}", platform=platform,
        ))
    return threads


def max_rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Relative error with an absolute floor so zero-gradient entries compare sanely."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(1e-6, np.maximum(np.abs(analytic), np.abs(numeric)))
    return float(np.max(np.abs(analytic - numeric) / denom))


def fd_check(loss_fn, arrays: dict[str, np.ndarray], step: float = 1e-4) -> dict[str, float]:
    """Compare analytic gradients against central finite differences.

    loss_fn(arrays) must return (loss_value: float, grads: dict[str, ndarray])
    where grads gives the analytic gradient for every entry of `arrays`.
    Returns the max relative error per array.
    """
    _, grads = loss_fn(arrays)
    errs = {}
    for name, base in arrays.items():
        numeric = np.zeros_like(base, dtype=np.float64)
        flat = base.reshape(-1)
        num_flat = numeric.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + step
            plus, _ = loss_fn(arrays)
            flat[i] = keep - step
            minus, _ = loss_fn(arrays)
            flat[i] = keep
            num_flat[i] = (plus - minus) / (2.0 * step)
        errs[name] = max_rel_err(grads[name], numeric)
    return errs
