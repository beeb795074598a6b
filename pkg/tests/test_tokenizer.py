"""Tests for vocabulary loading, WordPiece and pair encoding."""

from __future__ import annotations

import pytest

from distilkit.errors import ContractError, FormatError
from distilkit.tokenizer import (
    SPECIAL_TOKENS,
    UNK,
    Casing,
    Vocab,
    basic_split,
    encode_pair,
    encode_token_ids,
    load_vocab,
    simple_lower,
    tokenize,
    truncate_longest_first,
    wordpiece,
)

FIXTURE_TOKENS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "câ", "##nd", "x", "##a", "a"]


@pytest.fixture
def fixture_vocab(tmp_path):
    path = tmp_path / "vocab.txt"
    path.write_text("\n".join(FIXTURE_TOKENS) + "\n", encoding="utf-8")
    return load_vocab(path)


# ---------------------------------------------------------------------------
# load_vocab
# ---------------------------------------------------------------------------


class TestLoadVocab:
    def test_line_order_defines_ids(self, fixture_vocab):
        assert len(fixture_vocab) == 10
        assert fixture_vocab.pad_id == 0
        assert fixture_vocab.mask_id == 4
        assert fixture_vocab.convert_tokens_to_ids(["câ"]) == [5]

    def test_missing_special_token(self, tmp_path):
        path = tmp_path / "vocab.txt"
        path.write_text("\n".join(t for t in FIXTURE_TOKENS if t != "[MASK]") + "\n")
        with pytest.raises(FormatError, match=r"\[MASK\]"):
            load_vocab(path)

    def test_duplicate_token(self, tmp_path):
        path = tmp_path / "vocab.txt"
        path.write_text("\n".join([*FIXTURE_TOKENS, "##a"]) + "\n")
        with pytest.raises(FormatError, match="duplicate"):
            load_vocab(path)

    def test_empty_line_rejected(self, tmp_path):
        path = tmp_path / "vocab.txt"
        path.write_text("\n".join([*FIXTURE_TOKENS[:5], "", "a"]) + "\n")
        with pytest.raises(FormatError, match="empty line 6"):
            load_vocab(path)

    def test_ids_roundtrip_to_tokens(self, fixture_vocab):
        tokens = tokenize("când xa", fixture_vocab)
        ids = fixture_vocab.convert_tokens_to_ids(tokens)
        assert fixture_vocab.convert_ids_to_tokens(ids) == tokens


# ---------------------------------------------------------------------------
# tokenize
# ---------------------------------------------------------------------------


class TestTokenize:
    def test_greedy_longest_match(self, fixture_vocab):
        assert tokenize("când", fixture_vocab) == ["câ", "##nd"]

    def test_unknown_word(self, fixture_vocab):
        assert tokenize("zebra", fixture_vocab) == [UNK]

    def test_empty_string(self, fixture_vocab):
        assert tokenize("", fixture_vocab) == []

    def test_overlong_word_is_unknown(self, fixture_vocab):
        assert wordpiece("a" * 101, fixture_vocab) == [UNK]

    def test_punctuation_is_split(self):
        assert basic_split("Da, mâine!") == ["Da", ",", "mâine", "!"]

    def test_uncased_lowercases(self):
        vocab = Vocab((*SPECIAL_TOKENS, "câ", "##nd"), Casing.UNCASED)
        assert tokenize("CÂND", vocab) == ["câ", "##nd"]

    def test_cased_keeps_case(self):
        vocab = Vocab((*SPECIAL_TOKENS, "câ", "##nd"), Casing.CASED)
        assert tokenize("CÂND", vocab) == [UNK]

    @pytest.mark.parametrize(
        ("text", "lowered"),
        [("ȘTEFAN ÎȘI", "ștefan își"), ("İstanbul", "istanbul"), ("ŢARĂ", "ţară")],
    )
    def test_uncased_lowercase_is_one_to_one(self, text, lowered):
        assert simple_lower(text) == lowered
        assert basic_split(text, lowercase=True) == lowered.split()

    def test_output_stays_in_vocab(self, vocab):
        text = "w01 w02 zzz w03, w99"
        assert all(t in vocab for t in tokenize(text, vocab))


# ---------------------------------------------------------------------------
# encode_pair
# ---------------------------------------------------------------------------


class TestEncodePair:
    def test_single_segment_padding(self, fixture_vocab):
        enc = encode_pair("x", None, fixture_vocab, 8)
        v = fixture_vocab
        assert enc.input_ids == (v.cls_id, 7, v.sep_id, *[v.pad_id] * 5)
        assert enc.attention_mask == (1, 1, 1, 0, 0, 0, 0, 0)
        assert enc.segment_ids == (0,) * 8

    def test_pair_segments(self, fixture_vocab):
        enc = encode_pair("x", "a", fixture_vocab, 6)
        assert enc.segment_ids == (0, 0, 0, 1, 1, 0)
        assert enc.num_real == 5

    def test_longest_first_truncation(self, vocab):
        ids_a = list(range(10, 20))
        ids_b = list(range(30, 40))
        enc = encode_token_ids(ids_a, ids_b, vocab, 12)
        a, b = truncate_longest_first(ids_a, ids_b, 9)
        assert (len(a), len(b)) in {(5, 4), (4, 5)}
        assert len(enc) == 12
        assert enc.input_ids.count(vocab.sep_id) == 2

    def test_length_always_max_len(self, vocab):
        text = " ".join(f"w{i:02d}" for i in range(40))
        for max_len in (3, 7, 16):
            assert len(encode_pair(text, text, vocab, max_len)) == max_len

    def test_max_len_too_small(self, fixture_vocab):
        with pytest.raises(ContractError):
            encode_pair("x", None, fixture_vocab, 2)
