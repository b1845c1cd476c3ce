"""Rumor-thread data model: labels, posts, threads, depths, time slices.

A thread is a source claim plus a tree of replies.  Threads are immutable
after loading and safe to share read-only across workers.

Normalized thread file format (UTF-8, one JSON object per line):

    {"thread_id": str, "event": str, "platform": str,
     "veracity": "T"|"F"|"U",
     "posts": [{"post_id": str, "parent_id": str|null, "text": str,
                "timestamp": int|null, "stance": "S"|"D"|"Q"|"C"|null}]}

Exactly one post per thread has parent_id null (the source).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import IntEnum
from pathlib import Path

from .errors import SchemaError


class StanceLabel(IntEnum):
    """Reply stance toward the source claim. Index order is fixed."""

    S = 0  # support
    D = 1  # deny
    Q = 2  # query
    C = 3  # comment

    def one_hot(self) -> list[float]:
        vec = [0.0, 0.0, 0.0, 0.0]
        vec[self.value] = 1.0
        return vec


class VeracityLabel(IntEnum):
    """Thread-level ground truth. Index order is fixed."""

    T = 0  # true
    F = 1  # false
    U = 2  # unverified


STANCE_ORDER = (StanceLabel.S, StanceLabel.D, StanceLabel.Q, StanceLabel.C)
VERACITY_ORDER = (VeracityLabel.T, VeracityLabel.F, VeracityLabel.U)


@dataclass(frozen=True)
class Post:
    post_id: str
    parent_id: str | None
    text: str
    timestamp: int | None = None
    stance: StanceLabel | None = None
    platform: str = "twitter"


@dataclass(frozen=True)
class Thread:
    """Source claim, chronologically ordered replies, and veracity label."""

    thread_id: str
    source: Post
    replies: tuple[Post, ...]
    veracity: VeracityLabel
    event: str
    platform: str = "twitter"

    def posts(self) -> tuple[Post, ...]:
        return (self.source,) + self.replies


# Sort key for chronological ordering; missing timestamps go last.
def _ts_key(post: Post) -> float:
    return math.inf if post.timestamp is None else float(post.timestamp)


def validate_thread(thread: Thread) -> None:
    """Check the thread invariants; raise SchemaError naming the violation."""
    tid = thread.thread_id
    if thread.source.parent_id is not None:
        raise SchemaError(f"thread {tid!r}: source post must have no parent_id")
    seen: set[str] = set()
    for post in thread.posts():
        if post.post_id in seen:
            raise SchemaError(f"thread {tid!r}: duplicate post_id {post.post_id!r}")
        seen.add(post.post_id)
    for post in thread.replies:
        if post.parent_id is None:
            raise SchemaError(
                f"thread {tid!r}: reply {post.post_id!r} has no parent_id "
                "(only the source may omit it)"
            )
        if post.parent_id not in seen:
            raise SchemaError(
                f"thread {tid!r}: dangling parent {post.parent_id!r} "
                f"referenced by {post.post_id!r}"
            )
    # Tree rooted at the source: every reply's ancestor chain must reach the
    # source without revisiting a node.
    parent_of = {p.post_id: p.parent_id for p in thread.replies}
    root = thread.source.post_id
    for post in thread.replies:
        node = post.post_id
        hops: set[str] = set()
        while node != root:
            if node in hops:
                raise SchemaError(f"thread {tid!r}: reply cycle at {post.post_id!r}")
            hops.add(node)
            node = parent_of.get(node, root)


def _parse_post(obj: dict, tid: str, missing_stance: str) -> Post:
    for field in ("post_id", "text"):
        if field not in obj or not isinstance(obj[field], str):
            raise SchemaError(f"thread {tid!r}: post missing string field {field!r}")
    pid = obj["post_id"]
    parent = obj.get("parent_id")
    if parent is not None and not isinstance(parent, str):
        raise SchemaError(f"thread {tid!r}: post {pid!r} field 'parent_id' must be string or null")
    ts = obj.get("timestamp")
    if ts is not None and not isinstance(ts, int):
        raise SchemaError(f"thread {tid!r}: post {pid!r} field 'timestamp' must be int or null")
    raw_stance = obj.get("stance")
    if raw_stance is None:
        if missing_stance == "comment":
            stance = StanceLabel.C
        elif missing_stance == "keep":
            stance = None
        else:
            raise SchemaError(
                f"thread {tid!r}: post {pid!r} has no stance label "
                "(set missing_stance=comment to map these to C)"
            )
    else:
        try:
            stance = StanceLabel[raw_stance]
        except (KeyError, TypeError):
            raise SchemaError(f"thread {tid!r}: post {pid!r} has invalid stance {raw_stance!r}")
    return Post(post_id=pid, parent_id=parent, text=obj["text"], timestamp=ts, stance=stance)


def _parse_thread(obj: dict, missing_stance: str) -> Thread:
    tid = obj.get("thread_id")
    if not isinstance(tid, str):
        raise SchemaError("thread record missing string field 'thread_id'")
    raw_ver = obj.get("veracity")
    if raw_ver is None:
        raise SchemaError(f"thread {tid!r}: missing veracity label")
    try:
        veracity = VeracityLabel[raw_ver]
    except (KeyError, TypeError):
        raise SchemaError(f"thread {tid!r}: invalid veracity {raw_ver!r}")
    event = obj.get("event")
    if not isinstance(event, str):
        raise SchemaError(f"thread {tid!r}: missing string field 'event'")
    platform = obj.get("platform", "twitter")
    if not isinstance(platform, str):
        raise SchemaError(f"thread {tid!r}: field 'platform' must be a string")
    posts_raw = obj.get("posts")
    if not isinstance(posts_raw, list) or not posts_raw:
        raise SchemaError(f"thread {tid!r}: field 'posts' must be a non-empty list")
    posts = [_parse_post(p, tid, missing_stance) for p in posts_raw]
    sources = [p for p in posts if p.parent_id is None]
    if len(sources) != 1:
        raise SchemaError(f"thread {tid!r}: exactly one post must have parent_id null, found {len(sources)}")
    posts = [replace(p, platform=platform) for p in posts]
    source = next(p for p in posts if p.parent_id is None)
    replies = sorted((p for p in posts if p.parent_id is not None), key=_ts_key)
    thread = Thread(
        thread_id=tid,
        source=source,
        replies=tuple(replies),
        veracity=veracity,
        event=event,
        platform=platform,
    )
    validate_thread(thread)
    return thread


def load_dataset(path: str | Path, missing_stance: str = "reject") -> list[Thread]:
    """Load a normalized thread file (one JSON object per line).

    missing_stance: "reject" raises on posts without a stance label,
    "comment" maps them to C, "keep" leaves them unset (for stance-agnostic
    passes such as text preprocessing).
    """
    if missing_stance not in ("reject", "comment", "keep"):
        raise SchemaError(f"unknown missing_stance policy {missing_stance!r}")
    path = Path(path)
    threads = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            threads.append(_parse_thread(obj, missing_stance))
    return threads


def _post_to_obj(post: Post) -> dict:
    return {
        "post_id": post.post_id,
        "parent_id": post.parent_id,
        "text": post.text,
        "timestamp": post.timestamp,
        "stance": post.stance.name if post.stance is not None else None,
    }


def save_dataset(threads: list[Thread], path: str | Path) -> None:
    """Write threads in the normalized record-per-line format."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for t in threads:
            obj = {
                "thread_id": t.thread_id,
                "event": t.event,
                "platform": t.platform,
                "veracity": t.veracity.name,
                "posts": [_post_to_obj(p) for p in t.posts()],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def compute_depths(thread: Thread) -> dict[str, int]:
    """Reply hops from the source post; source depth is 0."""
    depths = {thread.source.post_id: 0}
    pending = list(thread.replies)
    # Replies may reference parents appearing later in the list; iterate
    # until settled (the tree invariant guarantees termination).
    while pending:
        rest = []
        for post in pending:
            parent_depth = depths.get(post.parent_id)
            if parent_depth is None:
                rest.append(post)
            else:
                depths[post.post_id] = parent_depth + 1
        if len(rest) == len(pending):  # pragma: no cover - blocked by validate_thread
            raise SchemaError(f"thread {thread.thread_id!r}: unreachable replies")
        pending = rest
    return depths


def time_slice(thread: Thread, checkpoint_hours: float) -> Thread:
    """Restrict a thread to replies seen within `checkpoint_hours` of the source.

    A reply is retained iff its elapsed time is <= the checkpoint AND all of
    its ancestors are retained (sliced threads stay valid trees).  Replies
    without timestamps are treated as arriving at +infinity.
    """
    if thread.source.timestamp is None:
        raise SchemaError(f"thread {thread.thread_id!r}: source post has no timestamp")
    horizon = thread.source.timestamp + checkpoint_hours * 3600.0
    in_window = {
        p.post_id for p in thread.replies if p.timestamp is not None and p.timestamp <= horizon
    }
    parent_of = {p.post_id: p.parent_id for p in thread.replies}
    root = thread.source.post_id

    def ancestors_in_window(post: Post) -> bool:
        node = post.parent_id
        while node != root:
            if node not in in_window:
                return False
            node = parent_of[node]
        return True

    kept = tuple(
        p for p in thread.replies if p.post_id in in_window and ancestors_in_window(p)
    )
    return replace(thread, replies=kept)
