"""Command-line surface: preprocess, train, eval, embed-check.

Every run writes a config-echo file with all effective values.  Failures
from known error classes exit nonzero with one machine-readable JSON line
on stderr: {"error_class": ..., "message": ...}.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import RunConfig, expand_grid, load_config, write_config_echo
from .embeddings import HashEmbedder, open_store
from .errors import ConfigError, EvaluationError, RumorVerifyError
from .evaluate import (
    cross_platform_eval,
    early_detection_eval,
    evaluate_model,
    leave_one_event_out,
    write_report_json,
    write_report_table,
)
from .normalize import NormalizationConfig, load_emoji_table, normalize_text
from .threads import load_dataset, save_dataset
from .training import EpochLog, TrainConfig, load_checkpoint, save_checkpoint, train


def _provider(cfg: RunConfig):
    if cfg.embedding_store:
        return open_store(cfg.embedding_store)
    return HashEmbedder(cfg.hash_dim)


def _load_split(cfg: RunConfig, path: str | None, name: str):
    if not path:
        raise ConfigError(f"config is missing required data path {name!r}")
    return load_dataset(path, missing_stance=cfg.missing_stance)


def _write_train_log(logs: list[EpochLog], path: Path) -> None:
    lines = ["epoch\ttrain_loss\tdev_macro_f1"]
    for entry in logs:
        lines.append(f"{entry.epoch}\t{entry.train_loss!r}\t{entry.dev_macro_f1!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _train_once(cfg: RunConfig, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_config_echo(cfg, out_dir / "config_echo.yaml")
    provider = _provider(cfg)
    train_threads = _load_split(cfg, cfg.train_path, "train_path")
    dev_threads = _load_split(cfg, cfg.dev_path, "dev_path")
    model_cfg = cfg.model_config(provider.dim)
    model, logs = train(
        train_threads, dev_threads, provider,
        model_cfg, cfg.train_config(), cfg.loss_config(),
    )
    checkpoint_path = out_dir / "checkpoint.rvck"
    save_checkpoint(model, checkpoint_path)
    _write_train_log(logs, out_dir / "train_log.tsv")
    print(f"best epoch {model.best_epoch} dev_macro_f1 {model.best_dev_macro_f1:.4f} "
          f"-> {checkpoint_path}")
    return checkpoint_path


def cmd_preprocess(args) -> int:
    cfg, _ = load_config(args.config, args.set)
    out_dir = cfg.resolved_output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    write_config_echo(cfg, out_dir / "config_echo.yaml")
    norm_cfg = NormalizationConfig(emoji_map=load_emoji_table(cfg.emoji_table))
    threads = load_dataset(args.input, missing_stance="keep")
    cleaned = []
    for thread in threads:
        posts = [replace(p, text=normalize_text(p.text, norm_cfg)) for p in thread.posts()]
        cleaned.append(replace(thread, source=posts[0], replies=tuple(posts[1:])))
    save_dataset(cleaned, args.output)
    print(f"normalized {sum(len(t.posts()) for t in cleaned)} posts "
          f"in {len(cleaned)} threads -> {args.output}")
    return 0


def cmd_train(args) -> int:
    cfg, grid = load_config(args.config, args.set)
    base_dir = cfg.resolved_output_dir()
    if grid:
        runs = expand_grid(cfg, grid)
        for name, run_cfg in runs:
            run_cfg = replace(run_cfg, output_dir=str(base_dir / name))
            _train_once(run_cfg, Path(run_cfg.output_dir))
        print(f"grid complete: {len(runs)} runs under {base_dir}")
    else:
        _train_once(cfg, base_dir)
    return 0


def _fold_train_fn(cfg: RunConfig, provider):
    """Training callback for protocols that retrain per fold.

    Carves a seeded 10% dev split (at least one thread) out of each fold's
    training threads.
    """

    def train_fn(threads, seed):
        if len(threads) < 2:
            raise EvaluationError("fold has fewer than 2 training threads")
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(threads))
        n_dev = max(1, len(threads) // 10)
        dev = [threads[i] for i in order[:n_dev]]
        tr = [threads[i] for i in order[n_dev:]]
        train_cfg = TrainConfig(
            learning_rate=cfg.learning_rate, weight_decay=cfg.weight_decay,
            clip_norm=cfg.clip_norm, batch_size=cfg.batch_size,
            epochs=cfg.epochs, seed=seed,
        )
        model, _ = train(tr, dev, provider, cfg.model_config(provider.dim),
                         train_cfg, cfg.loss_config())
        return model

    return train_fn


def cmd_eval(args) -> int:
    cfg, _ = load_config(args.config, args.set)
    out_dir = cfg.resolved_output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    write_config_echo(cfg, out_dir / "config_echo.yaml")
    provider = _provider(cfg)
    if args.protocol in ("standard", "early"):
        if not args.checkpoint:
            raise ConfigError(f"protocol {args.protocol!r} requires --checkpoint")
        model = load_checkpoint(args.checkpoint, expect_config=cfg.model_config(provider.dim))
        test_threads = _load_split(cfg, cfg.test_path, "test_path")
        if args.protocol == "standard":
            report = evaluate_model(model, test_threads, provider)
        else:
            report = early_detection_eval(model, test_threads, cfg.early_checkpoints, provider)
    else:
        test_threads = _load_split(cfg, cfg.test_path, "test_path")
        train_fn = _fold_train_fn(cfg, provider)
        if args.protocol == "loeo":
            report = leave_one_event_out(test_threads, train_fn, provider, seed=cfg.seed)
        else:
            report = cross_platform_eval(
                test_threads, train_fn, provider,
                pairs=cfg.cross_platform_pairs, seed=cfg.seed,
            )
    write_report_json(report, out_dir / "report.json")
    write_report_table(report, out_dir / "report.tsv")
    if isinstance(report, list):
        for (a, b), rep in report:
            print(f"{a}->{b}: macro_f1 {rep.macro_f1:.4f} accuracy {rep.accuracy:.4f}")
    else:
        print(f"{args.protocol}: n {report.n} macro_f1 {report.macro_f1:.4f} "
              f"accuracy {report.accuracy:.4f}")
    print(f"reports -> {out_dir}")
    return 0


def cmd_embed_check(args) -> int:
    store = open_store(args.embeddings)
    threads = load_dataset(args.threads, missing_stance="keep")
    missing = []
    total = 0
    for thread in threads:
        for post in thread.posts():
            total += 1
            if post.post_id not in store:
                missing.append(post.post_id)
    if missing:
        shown = ", ".join(missing[:5])
        raise EvaluationError(
            f"embedding file misses {len(missing)}/{total} posts (first: {shown})"
        )
    print(f"ok: {total} posts covered, dim {store.dim}, "
          f"pooling {store.header.pooling!r}, model {store.header.source_model!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rumorverify",
        description="Stance-aware structural rumor verification pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="YAML config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable; flags win)")

    p = sub.add_parser("preprocess", parents=[common],
                       help="normalize post texts in a thread file")
    p.add_argument("input", help="normalized thread file to clean")
    p.add_argument("output", help="destination thread file")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", parents=[common], help="train and save the best checkpoint")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="run an evaluation protocol")
    p.add_argument("--checkpoint", type=str, default=None)
    p.add_argument("--protocol", choices=("standard", "loeo", "early", "crossplat"),
                   default="standard")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("embed-check", help="validate an embedding file against a thread file")
    p.add_argument("threads", help="normalized thread file")
    p.add_argument("embeddings", help="embedding store file")
    p.set_defaults(func=cmd_embed_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RumorVerifyError as exc:
        print(json.dumps({"error_class": exc.error_class, "message": str(exc)}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
