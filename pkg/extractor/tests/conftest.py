"""Shared fixtures: a tiny local encoder checkpoint and sample thread files."""

import sys
from pathlib import Path

import pytest
import torch
import transformers
from transformers import BertConfig, BertModel, BertTokenizerFast

sys.path.insert(0, str(Path(__file__).parent))

from sample_data import VOCAB, simple_thread, write_threads  # noqa: E402

transformers.logging.disable_progress_bar()
transformers.logging.set_verbosity_error()


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("tiny-encoder")
    vocab_path = root / "vocab.txt"
    vocab_path.write_text("\n".join(VOCAB), encoding="utf-8")
    tokenizer = BertTokenizerFast(vocab_file=str(vocab_path), do_lower_case=True)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=32,
    )
    torch.manual_seed(1234)
    model = BertModel(config)
    model_dir = root / "model"
    model.save_pretrained(model_dir)
    tokenizer.save_pretrained(model_dir)
    return str(model_dir)


@pytest.fixture()
def threads_file(tmp_path):
    path = tmp_path / "threads.jsonl"
    write_threads(path, [
        simple_thread("t1", ["the rumor is true", "fire report confirmed", "breaking news"]),
        simple_thread("t2", ["police deny the hoax", "false report"], veracity="F"),
    ])
    return path
