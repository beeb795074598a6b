"""Tests for the transformer encoder, checkpoints and size presets."""

from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from distilkit.encoder import (
    PRESETS,
    REPORTED_PARAMS_M,
    EncodedBatch,
    ModelConfig,
    count_params,
    forward,
    get_preset_config,
    load_checkpoint,
    mlm_logits,
    new_model,
    save_checkpoint,
    size_table,
)
from distilkit.errors import ConfigError, DimensionError, FormatError, InputError
from distilkit.numerics import Tensor, backward, cross_entropy, current_tape, no_grad
from distilkit.tokenizer import encode_pair


def batch_of(vocab, texts, max_len=8):
    return EncodedBatch.from_encodings([encode_pair(t, None, vocab, max_len) for t in texts])


def params_within_tolerance(computed: int, reported_m: int) -> bool:
    reported = reported_m * 1e6
    return abs(computed - reported) <= max(0.02 * reported, 0.5e6)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


class TestNewModel:
    def test_same_seed_same_parameters(self, tiny_config):
        a, b = new_model(tiny_config, seed=3), new_model(tiny_config, seed=3)
        for name in a.params:
            np.testing.assert_array_equal(a.params[name].data, b.params[name].data)

    def test_biases_zero_and_weights_truncated(self, tiny_model):
        assert not tiny_model.params["layers.0.attention.query.bias"].data.any()
        weights = tiny_model.params["layers.0.attention.query.weight"].data
        assert np.abs(weights).max() <= 0.04

    def test_heads_must_divide_hidden(self):
        with pytest.raises(ConfigError, match="divisible"):
            new_model(ModelConfig(num_layers=1, hidden=770, num_heads=12, vocab_size=10))

    def test_count_matches_closed_form(self, tiny_model, tiny_config):
        assert count_params(tiny_model) == tiny_config.param_count()

    def test_encoder_params_linear_in_layers(self, tiny_config):
        one = dataclasses.replace(tiny_config, num_layers=1).param_count()
        two = dataclasses.replace(tiny_config, num_layers=2).param_count()
        four = dataclasses.replace(tiny_config, num_layers=4).param_count()
        assert four - two == 2 * (two - one)


# ---------------------------------------------------------------------------
# Forward pass
# ---------------------------------------------------------------------------


class TestForward:
    def test_output_shape(self, tiny_model, vocab):
        out = forward(tiny_model, batch_of(vocab, [""]))
        assert out.last_hidden.shape == (1, 8, 16)
        assert len(out.hidden_states) == tiny_model.config.num_layers + 1

    def test_padding_gets_no_attention(self, tiny_model, vocab):
        batch = batch_of(vocab, ["w01"], max_len=5)
        assert batch.attention_mask.tolist() == [[1, 1, 1, 0, 0]]
        out = forward(tiny_model, batch)
        for probs in out.attentions:
            assert probs.data[..., 3:].max() < 1e-12
            np.testing.assert_allclose(probs.data.sum(axis=-1), 1.0, atol=1e-9)

    def test_batch_permutation(self, tiny_model, vocab):
        texts = ["w01 w02", "w03", "w04 w05 w06"]
        out = forward(tiny_model, batch_of(vocab, texts)).last_hidden.data
        swapped = forward(tiny_model, batch_of(vocab, texts[::-1])).last_hidden.data
        np.testing.assert_allclose(swapped, out[::-1], atol=1e-10)

    def test_eval_mode_is_deterministic(self, tiny_model, vocab):
        batch = batch_of(vocab, ["w01 w02 w03"])
        first = forward(tiny_model.eval(), batch).last_hidden.data
        second = forward(tiny_model, batch).last_hidden.data
        np.testing.assert_array_equal(first, second)

    def test_training_mode_applies_dropout(self, tiny_model, vocab):
        batch = batch_of(vocab, ["w01 w02 w03"])
        with no_grad():
            first = forward(tiny_model.train(), batch).last_hidden.data
            second = forward(tiny_model, batch).last_hidden.data
        assert not np.array_equal(first, second)

    def test_token_id_out_of_range(self, tiny_model, vocab):
        batch = batch_of(vocab, ["w01"])
        batch.input_ids[0, 1] = tiny_model.config.vocab_size
        with pytest.raises(InputError):
            forward(tiny_model, batch)

    def test_sequence_longer_than_max_position(self, tiny_model, vocab):
        with pytest.raises(InputError):
            forward(tiny_model, batch_of(vocab, ["w01"], max_len=40))


# ---------------------------------------------------------------------------
# MLM head
# ---------------------------------------------------------------------------


class TestMlmLogits:
    def test_vocab_sized_output(self, tiny_model, vocab):
        out = forward(tiny_model, batch_of(vocab, ["w01"]))
        assert mlm_logits(tiny_model, out.last_hidden).shape[-1] == len(vocab)

    def test_hidden_mismatch(self, tiny_model):
        with pytest.raises(DimensionError):
            mlm_logits(tiny_model, Tensor(np.zeros((1, 2, 8))))

    def test_projection_is_tied_to_embeddings(self, tiny_model, vocab):
        hidden = forward(tiny_model, batch_of(vocab, ["w01"])).last_hidden
        before = mlm_logits(tiny_model, hidden).data
        tiny_model.params["embeddings.word"].data[9] += 1.0
        after = mlm_logits(tiny_model, hidden).data
        assert not np.allclose(before[..., 9], after[..., 9])

    def test_gradient_matches_finite_differences(self, tiny_model, vocab):
        current_tape().clear()
        batch = batch_of(vocab, ["w01 w02"], max_len=4)
        targets = batch.input_ids

        def loss_value() -> float:
            with no_grad():
                out = forward(tiny_model, batch)
                return cross_entropy(mlm_logits(tiny_model, out.last_hidden), targets).item()

        out = forward(tiny_model, batch)
        backward(cross_entropy(mlm_logits(tiny_model, out.last_hidden), targets))
        rng = np.random.default_rng(0)
        names = sorted(n for n in tiny_model.params if not n.startswith("pooler."))
        for _ in range(20):
            name = names[rng.integers(len(names))]
            p = tiny_model.params[name]
            idx = tuple(int(rng.integers(n)) for n in p.shape)
            original = p.data[idx]
            p.data[idx] = original + 1e-5
            plus = loss_value()
            p.data[idx] = original - 1e-5
            minus = loss_value()
            p.data[idx] = original
            numeric = (plus - minus) / 2e-5
            assert p.grad[idx] == pytest.approx(numeric, rel=1e-3, abs=1e-7), name


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


class TestCheckpoint:
    def test_roundtrip_is_exact(self, tmp_path, tiny_model, vocab):
        path = tmp_path / "model.ckpt"
        save_checkpoint(tiny_model, path, metadata={"note": "x"})
        loaded = load_checkpoint(path)
        assert loaded.config == tiny_model.config
        assert count_params(loaded) == count_params(tiny_model)
        batch = batch_of(vocab, ["w01 w02"])
        np.testing.assert_array_equal(
            forward(loaded, batch).last_hidden.data, forward(tiny_model, batch).last_hidden.data
        )

    def test_truncated_file(self, tmp_path, tiny_model):
        path = tmp_path / "model.ckpt"
        save_checkpoint(tiny_model, path)
        path.write_bytes(path.read_bytes()[:-10])
        with pytest.raises(FormatError):
            load_checkpoint(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "model.ckpt"
        path.write_bytes(b"NOTACKPT" + b"\x00" * 32)
        with pytest.raises(FormatError, match="magic"):
            load_checkpoint(path)


# ---------------------------------------------------------------------------
# Presets and sizes
# ---------------------------------------------------------------------------


class TestPresets:
    @pytest.mark.parametrize("name", sorted(REPORTED_PARAMS_M))
    def test_reported_sizes_reproduced(self, name):
        computed = PRESETS[name].param_count()
        assert params_within_tolerance(computed, REPORTED_PARAMS_M[name])

    def test_bert_base_ro_size(self):
        assert PRESETS["bert-base-ro"].param_count() == pytest.approx(124e6, rel=0.02)

    def test_size_table_rows(self):
        rows = {row.name: row for row in size_table()}
        assert set(rows) == set(PRESETS)
        row = rows["robert-base"]
        assert row.size_mb == pytest.approx(row.params * 4 / 2**20)
        assert row.to_dict()["reported_m"] == 114
        assert rows["toy-student"].reported_m is None

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match="Unknown model preset"):
            get_preset_config("gpt")

    def test_hidden_override_resizes_feed_forward(self):
        config = get_preset_config("toy-student", hidden=32)
        assert config.intermediate == 128
