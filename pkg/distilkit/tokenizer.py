"""WordPiece vocabulary loading, tokenization and pair encoding."""

from __future__ import annotations

import unicodedata
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path

from .errors import ContractError, FormatError
from .fileio import atomic_write_text

CLS, SEP, MASK, PAD, UNK = "[CLS]", "[SEP]", "[MASK]", "[PAD]", "[UNK]"
SPECIAL_TOKENS = (CLS, SEP, MASK, PAD, UNK)
CONTINUATION_PREFIX = "##"
MAX_WORD_CHARS = 100


class Casing(StrEnum):
    CASED = "cased"
    UNCASED = "uncased"


@dataclass(frozen=True)
class Vocab:
    """Immutable token inventory; ids are line positions in the vocab file."""

    tokens: tuple[str, ...]
    casing: Casing = Casing.CASED
    token_to_id: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        index: dict[str, int] = {}
        for i, token in enumerate(self.tokens):
            if token in index:
                raise FormatError(
                    f"duplicate token {token!r} at lines {index[token] + 1} and {i + 1}"
                )
            index[token] = i
        for special in SPECIAL_TOKENS:
            if special not in index:
                raise FormatError(f"vocabulary is missing special token {special}")
        object.__setattr__(self, "token_to_id", index)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: object) -> bool:
        return token in self.token_to_id

    @property
    def cls_id(self) -> int:
        return self.token_to_id[CLS]

    @property
    def sep_id(self) -> int:
        return self.token_to_id[SEP]

    @property
    def mask_id(self) -> int:
        return self.token_to_id[MASK]

    @property
    def pad_id(self) -> int:
        return self.token_to_id[PAD]

    @property
    def unk_id(self) -> int:
        return self.token_to_id[UNK]

    @property
    def special_ids(self) -> frozenset[int]:
        return frozenset(self.token_to_id[t] for t in SPECIAL_TOKENS)

    def convert_tokens_to_ids(self, tokens: Iterable[str]) -> list[int]:
        unk = self.unk_id
        return [self.token_to_id.get(t, unk) for t in tokens]

    def convert_ids_to_tokens(self, ids: Iterable[int]) -> list[str]:
        return [self.tokens[i] for i in ids]


def load_vocab(path: str | Path, casing: Casing | str = Casing.CASED) -> Vocab:
    """Read a one-token-per-line UTF-8 vocabulary file."""
    text = Path(path).read_text(encoding="utf-8")
    tokens = [line.rstrip("\r") for line in text.split("\n")]
    if tokens and tokens[-1] == "":
        tokens.pop()
    if any(t == "" for t in tokens):
        raise FormatError(f"{path}: empty line {tokens.index('') + 1} in vocabulary")
    return Vocab(tuple(tokens), Casing(casing))


def save_vocab(vocab: Vocab, path: str | Path) -> None:
    atomic_write_text(path, "\n".join(vocab.tokens) + "\n")


# ---------------------------------------------------------------------------
# Tokenization
# ---------------------------------------------------------------------------


def _is_punctuation(char: str) -> bool:
    cp = ord(char)
    # ASCII symbols such as "$" and "^" are split off like punctuation.
    if 33 <= cp <= 47 or 58 <= cp <= 64 or 91 <= cp <= 96 or 123 <= cp <= 126:
        return True
    return unicodedata.category(char).startswith("P")


def simple_lower(text: str) -> str:
    """Unicode simple lowercase: one character in, one character out, diacritics kept."""
    return "".join(char.lower()[0] for char in text)


def basic_split(text: str, lowercase: bool = False) -> list[str]:
    """Split on whitespace, then isolate each punctuation character."""
    if lowercase:
        text = simple_lower(text)
    pieces: list[str] = []
    for chunk in text.split():
        current: list[str] = []
        for char in chunk:
            if _is_punctuation(char):
                if current:
                    pieces.append("".join(current))
                    current = []
                pieces.append(char)
            else:
                current.append(char)
        if current:
            pieces.append("".join(current))
    return pieces


def wordpiece(word: str, vocab: Vocab, max_chars: int = MAX_WORD_CHARS) -> list[str]:
    """Greedy longest-match segmentation of one word; ``[UNK]`` if it cannot be covered."""
    if len(word) > max_chars:
        return [UNK]
    pieces: list[str] = []
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while start < end:
            candidate = word[start:end]
            if start > 0:
                candidate = CONTINUATION_PREFIX + candidate
            if candidate in vocab:
                match = candidate
                break
            end -= 1
        if match is None:
            return [UNK]
        pieces.append(match)
        start = end
    return pieces


def tokenize(text: str, vocab: Vocab) -> list[str]:
    lowercase = vocab.casing == Casing.UNCASED
    tokens: list[str] = []
    for word in basic_split(text, lowercase=lowercase):
        tokens.extend(wordpiece(word, vocab))
    return tokens


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Encoding:
    """Model-ready ids, attention mask (1 = real) and segment ids for one example."""

    input_ids: tuple[int, ...]
    attention_mask: tuple[int, ...]
    segment_ids: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.input_ids)
        if len(self.attention_mask) != n or len(self.segment_ids) != n:
            raise ContractError("input_ids, attention_mask and segment_ids differ in length")

    def __len__(self) -> int:
        return len(self.input_ids)

    @property
    def num_real(self) -> int:
        return sum(self.attention_mask)


def truncate_longest_first(a: list, b: list, budget: int) -> tuple[list, list]:
    """Drop trailing items from the longer list (the second on ties) until both fit."""
    a, b = list(a), list(b)
    while len(a) + len(b) > budget:
        if len(a) > len(b):
            a.pop()
        else:
            b.pop()
    return a, b


def encode_token_ids(
    ids_a: Sequence[int],
    ids_b: Sequence[int] | None,
    vocab: Vocab,
    max_len: int,
) -> Encoding:
    """Assemble ``[CLS] a [SEP] (b [SEP])``, truncated and padded to *max_len*."""
    if max_len < 3:
        raise ContractError(f"max_len must be at least 3, got {max_len}")
    if ids_b is None:
        a, _ = truncate_longest_first(list(ids_a), [], max_len - 2)
        b: list[int] = []
    else:
        a, b = truncate_longest_first(list(ids_a), list(ids_b), max_len - 3)
    ids = [vocab.cls_id, *a, vocab.sep_id]
    segments = [0] * len(ids)
    if ids_b is not None:
        ids += [*b, vocab.sep_id]
        segments += [1] * (len(b) + 1)
    real = len(ids)
    padding = max_len - real
    return Encoding(
        input_ids=tuple(ids + [vocab.pad_id] * padding),
        attention_mask=tuple([1] * real + [0] * padding),
        segment_ids=tuple(segments + [0] * padding),
    )


def encode_pair(a: str, b: str | None, vocab: Vocab, max_len: int) -> Encoding:
    ids_a = vocab.convert_tokens_to_ids(tokenize(a, vocab))
    ids_b = None if b is None else vocab.convert_tokens_to_ids(tokenize(b, vocab))
    return encode_token_ids(ids_a, ids_b, vocab, max_len)
