"""Stance-aware structural rumor verification."""

from .threads import Post, StanceLabel, Thread, VeracityLabel

__version__ = "0.1.0"

__all__ = ["Post", "StanceLabel", "Thread", "VeracityLabel", "__version__"]
