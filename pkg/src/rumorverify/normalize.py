"""Supplemental text normalization applied before embedding extraction.

Replacement order is URLs -> mentions -> hashtags -> emoji, because URLs
may themselves contain '#' and '@'.  The whole pipeline is idempotent:
the replacement tokens never re-match any of the patterns.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError

_URL_RE = re.compile(r"(?:[A-Za-z][A-Za-z0-9+.-]*://|www\.)\S*")
_MENTION_RE = re.compile(r"@\w+")
_HASHTAG_RE = re.compile(r"#(\w+)")
_WS_RE = re.compile(r"\s+")

# Boundary rules for hashtag segmentation, applied between adjacent chars:
#   lower -> upper, letter <-> digit, and upper -> (upper followed by lower).
_SEGMENT_RE = re.compile(
    r"(?<=[a-z])(?=[A-Z])"
    r"|(?<=[A-Za-z])(?=[0-9])"
    r"|(?<=[0-9])(?=[A-Za-z])"
    r"|(?<=[A-Z])(?=[A-Z][a-z])"
)

# Unicode blocks treated as emoji when absent from the mapping table.
_EMOJI_RANGE_RE = re.compile(
    "["
    "\U0001F000-\U0001FAFF"
    "☀-➿"
    "⬀-⯿"
    "←-⇿"
    "️"
    "‍"
    "⃣"
    "]+"
)


def load_emoji_table(path: str | Path | None = None) -> dict[str, str]:
    """Read an emoji mapping file (record-per-line {"emoji", "text"}).

    With no path, the bundled table ships with the package.
    """
    if path is None:
        text = resources.files("rumorverify.data").joinpath("emoji_table.jsonl").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    table: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        table[obj["emoji"]] = obj["text"]
    return table


@dataclass
class NormalizationConfig:
    url_token: str = "$url$"
    mention_token: str = "$mention$"
    emoji_map: dict[str, str] = field(default_factory=load_emoji_table)
    segment_hashtags: bool = True

    def __post_init__(self):
        for name, token in (("url_token", self.url_token), ("mention_token", self.mention_token)):
            if not token or any(ch.isspace() for ch in token):
                raise ConfigError(f"{name} must be non-empty and contain no whitespace")


def segment_hashtag(tag: str) -> str:
    """Split a hashtag body into constituent words and numbers.

    Inserts single spaces at case and letter/digit boundaries; every
    non-space character of the input is preserved in order.
    """
    return _SEGMENT_RE.sub(" ", tag)


def _compile_emoji_map_re(emoji_map: dict[str, str]) -> re.Pattern | None:
    if not emoji_map:
        return None
    # Longest sequences first so multi-codepoint emoji win over their parts.
    keys = sorted(emoji_map, key=len, reverse=True)
    return re.compile("|".join(re.escape(k) for k in keys))


def normalize_text(text: str, cfg: NormalizationConfig | None = None) -> str:
    """Apply the full normalization pipeline to one post's text.

    URLs (scheme:// or www. prefixed) become cfg.url_token, @-mentions
    become cfg.mention_token, hashtags are segmented, mapped emoji become
    their descriptions, unmapped emoji are removed, and whitespace is
    collapsed and trimmed.
    """
    if cfg is None:
        cfg = NormalizationConfig()
    out = _URL_RE.sub(lambda m: cfg.url_token, text)
    out = _MENTION_RE.sub(lambda m: cfg.mention_token, out)
    if cfg.segment_hashtags:
        out = _HASHTAG_RE.sub(lambda m: segment_hashtag(m.group(1)), out)
    else:
        out = _HASHTAG_RE.sub(lambda m: m.group(1), out)
    mapped = _compile_emoji_map_re(cfg.emoji_map)
    if mapped is not None:
        out = mapped.sub(lambda m: f" {cfg.emoji_map[m.group(0)]} ", out)
    out = _EMOJI_RANGE_RE.sub(" ", out)
    return _WS_RE.sub(" ", out).strip()
