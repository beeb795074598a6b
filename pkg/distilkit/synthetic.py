"""Seeded toy data: a small vocabulary, a Markov token language and separable task sets."""

from __future__ import annotations

import numpy as np

from .datasets import TaggedSentence, TextExample
from .errors import ConfigError
from .tokenizer import SPECIAL_TOKENS, Casing, Vocab

TOY_VOCAB_SIZE = 64


def toy_vocab(size: int = TOY_VOCAB_SIZE) -> Vocab:
    """Special tokens followed by whole-word tokens ``w00``, ``w01``, ..."""
    words = size - len(SPECIAL_TOKENS)
    if words < 8:
        raise ConfigError(f"a toy vocabulary needs at least {len(SPECIAL_TOKENS) + 8} tokens")
    return Vocab((*SPECIAL_TOKENS, *(f"w{i:02d}" for i in range(words))), Casing.UNCASED)


def word_tokens(vocab: Vocab) -> list[str]:
    return [t for t in vocab.tokens if t not in SPECIAL_TOKENS]


class MarkovLanguage:
    """Order-2 generator: each token pair has a few likely successors."""

    def __init__(self, vocab: Vocab, seed: int = 42, branching: int = 3) -> None:
        self.words = word_tokens(vocab)
        rng = np.random.default_rng(seed)
        n = len(self.words)
        self.successors = rng.integers(0, n, size=(n, n, branching))
        self.weights = rng.dirichlet(np.full(branching, 0.5), size=(n, n))

    def sentence(self, rng: np.random.Generator, length: int) -> list[str]:
        n = len(self.words)
        ids = list(rng.integers(0, n, size=2))
        while len(ids) < length:
            a, b = ids[-2], ids[-1]
            choice = rng.choice(self.successors.shape[-1], p=self.weights[a, b])
            ids.append(int(self.successors[a, b, choice]))
        return [self.words[i] for i in ids[:length]]

    def corpus(
        self, num_lines: int, seed: int = 42, min_len: int = 6, max_len: int = 16
    ) -> list[str]:
        rng = np.random.default_rng([seed, 1])
        return [
            " ".join(self.sentence(rng, int(rng.integers(min_len, max_len + 1))))
            for _ in range(num_lines)
        ]


def _partition(words: list[str], groups: int) -> list[list[str]]:
    size = len(words) // (groups + 1)
    if size < 1:
        raise ConfigError(f"vocabulary too small for {groups} separable groups")
    return [words[g * size:(g + 1) * size] for g in range(groups + 1)]


def classification_set(
    vocab: Vocab,
    num_examples: int,
    num_labels: int = 2,
    seed: int = 42,
    pair: bool = False,
    length: int = 8,
) -> list[TextExample]:
    """Each label owns its own signal tokens; the rest of the text is shared noise."""
    groups = _partition(word_tokens(vocab), num_labels)
    noise, signals = groups[-1], groups[:-1]
    rng = np.random.default_rng(seed)
    examples = []
    for i in range(num_examples):
        label = i % num_labels
        words = list(rng.choice(noise, size=length // 2))
        words += list(rng.choice(signals[label], size=length - len(words)))
        rng.shuffle(words)
        text_b = " ".join(rng.choice(noise, size=length // 2)) if pair else None
        examples.append(TextExample(f"ex{i:04d}", f"c{label}", " ".join(words), text_b))
    return examples


def tagging_set(
    vocab: Vocab,
    num_sentences: int,
    tags: tuple[str, ...] = ("DET", "NOUN", "VERB"),
    seed: int = 42,
    length: int = 8,
) -> list[TaggedSentence]:
    """Every word token has one fixed tag."""
    words = word_tokens(vocab)
    tag_of = {w: tags[i % len(tags)] for i, w in enumerate(words)}
    rng = np.random.default_rng(seed)
    sentences = []
    for i in range(num_sentences):
        tokens = tuple(rng.choice(words, size=length))
        sentences.append(TaggedSentence(f"s{i:04d}", tokens, tuple(tag_of[t] for t in tokens)))
    return sentences


def ner_set(
    vocab: Vocab,
    num_sentences: int,
    types: tuple[str, ...] = ("PER", "LOC"),
    seed: int = 42,
    length: int = 10,
) -> list[TaggedSentence]:
    """Noise tokens tagged ``O`` around one or two entity spans of type-specific tokens."""
    groups = _partition(word_tokens(vocab), len(types))
    noise, entity_words = groups[-1], groups[:-1]
    rng = np.random.default_rng(seed)
    sentences = []
    for i in range(num_sentences):
        tokens = list(rng.choice(noise, size=length))
        tags = ["O"] * length
        for start in sorted(rng.choice(np.arange(0, length - 1, 3), size=2, replace=False)):
            kind = int(rng.integers(len(types)))
            span = int(rng.integers(1, 3))
            for k in range(span):
                tokens[start + k] = str(rng.choice(entity_words[kind]))
                tags[start + k] = ("B-" if k == 0 else "I-") + types[kind]
        sentences.append(TaggedSentence(f"s{i:04d}", tuple(tokens), tuple(tags)))
    return sentences


def regression_pairs(
    vocab: Vocab, num_examples: int, seed: int = 42, length: int = 10
) -> list[TextExample]:
    """Pairs whose similarity score (0 to 5) is the share of tokens they have in common."""
    words = word_tokens(vocab)
    rng = np.random.default_rng(seed)
    examples = []
    for i in range(num_examples):
        a = list(rng.choice(words, size=length))
        shared = int(rng.integers(0, length + 1))
        b = a[:shared] + list(rng.choice(words, size=length - shared))
        score = 5.0 * shared / length
        examples.append(TextExample(f"p{i:04d}", f"{score:.2f}", " ".join(a), " ".join(b)))
    return examples
