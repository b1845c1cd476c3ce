"""Command line for the embedding extractor."""

from __future__ import annotations

import argparse
import sys

from .extract import ExtractorConfig, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rumorembed",
        description="Extract pooled post embeddings from a normalized thread file",
    )
    parser.add_argument("threads", help="normalized thread file (.jsonl)")
    parser.add_argument("output", help="embedding store file to write")
    parser.add_argument("--model", default="bert-base-uncased",
                        help="encoder name or local checkpoint directory")
    parser.add_argument("--max-seq-len", type=int, default=20)
    parser.add_argument("--batch-size", type=int, default=32)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = ExtractorConfig(
        model_name=args.model,
        max_seq_len=args.max_seq_len,
        batch_size=args.batch_size,
    )
    try:
        count = extract(args.threads, args.output, cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {count} embeddings -> {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
