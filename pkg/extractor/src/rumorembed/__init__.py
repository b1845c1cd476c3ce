"""Embedding extraction for the rumor verification pipeline."""

from .extract import Embedder, ExtractorConfig, extract, read_posts

__version__ = "0.1.0"

__all__ = ["Embedder", "ExtractorConfig", "extract", "read_posts", "__version__"]
