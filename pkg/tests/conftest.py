"""Shared fixtures: toy vocabularies and tiny encoders."""

from __future__ import annotations

import pytest

from distilkit.encoder import ModelConfig, new_model
from distilkit.numerics import current_tape
from distilkit.synthetic import TOY_VOCAB_SIZE, toy_vocab
from distilkit.tokenizer import save_vocab

TINY = ModelConfig(num_layers=2, hidden=16, num_heads=2, vocab_size=TOY_VOCAB_SIZE,
                   max_position=32)


@pytest.fixture
def vocab():
    return toy_vocab()


@pytest.fixture
def vocab_file(tmp_path, vocab):
    path = tmp_path / "vocab.txt"
    save_vocab(vocab, path)
    return path


@pytest.fixture
def tiny_config():
    return TINY


@pytest.fixture
def tiny_model():
    return new_model(TINY, seed=7)


@pytest.fixture
def tiny_teacher():
    return new_model(ModelConfig(num_layers=4, hidden=16, num_heads=2,
                                 vocab_size=TOY_VOCAB_SIZE, max_position=32), seed=11)


@pytest.fixture(autouse=True)
def fresh_tape():
    current_tape().clear()
    yield
    current_tape().clear()
