"""Tests for configuration loading, precedence and validation."""

from __future__ import annotations

import dataclasses
import json

import pytest

from distilkit.config import (
    DistillConfig,
    EarlyStopping,
    FinetuneHyperparams,
    find_config_file,
    load_config,
    validate_config,
)
from distilkit.errors import ConfigError


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch, tmp_path):
    for name in ("DISTILKIT_CONFIG_DIR", "DISTILKIT_SEED", "DISTILKIT_THREADS"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)


def write_config(tmp_path, text: str):
    path = tmp_path / "distilkit.toml"
    path.write_text(text, encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Loading and precedence
# ---------------------------------------------------------------------------


class TestLoadConfig:
    def test_defaults_without_file(self):
        cfg = load_config()
        assert cfg.source is None
        assert cfg.run.seed == 42
        assert cfg.distill.lambdas == (0.625, 0.25, 0.125)
        assert validate_config(cfg) == []

    def test_file_in_cwd_is_found(self, tmp_path):
        write_config(tmp_path, "[run]\nseed = 7\n")
        cfg = load_config()
        assert cfg.run.seed == 7
        assert cfg.distill.seed == 7
        assert cfg.bench.seed == 7

    def test_config_dir_from_environment(self, tmp_path, monkeypatch):
        conf_dir = tmp_path / "conf"
        conf_dir.mkdir()
        (conf_dir / "distilkit.toml").write_text("[run]\nthreads = 3\n")
        monkeypatch.setenv("DISTILKIT_CONFIG_DIR", str(conf_dir))
        assert find_config_file() == conf_dir / "distilkit.toml"
        assert load_config().run.threads == 3

    def test_env_overrides_file_and_flags_override_env(self, tmp_path, monkeypatch):
        path = write_config(tmp_path, "[run]\nseed = 1\nthreads = 2\n")
        monkeypatch.setenv("DISTILKIT_SEED", "5")
        monkeypatch.setenv("DISTILKIT_THREADS", "4")
        cfg = load_config(path)
        assert (cfg.run.seed, cfg.run.threads) == (5, 4)
        cfg = load_config(path, seed=9, output_format="json")
        assert (cfg.run.seed, cfg.run.threads, cfg.run.output_format) == (9, 4, "json")

    def test_bad_env_value_is_reported(self, monkeypatch):
        monkeypatch.setenv("DISTILKIT_THREADS", "many")
        errors = validate_config(load_config())
        assert any("DISTILKIT_THREADS" in e for e in errors)

    def test_sections_are_applied(self, tmp_path):
        path = write_config(
            tmp_path,
            "[distill]\ntemperature = 3.0\nepochs = 1\n"
            "[bench]\nlengths = [8, 16]\nreps = 5\n"
            "[finetune.ner]\nepochs = 2\n"
            "[cleaning]\nlanguage_gate = false\n",
        )
        cfg = load_config(path)
        assert cfg.distill.temperature == 3.0
        assert cfg.bench.lengths == (8, 16)
        assert cfg.finetune == {"ner": {"epochs": 2}}
        assert cfg.cleaning.language_gate is False
        assert validate_config(cfg) == []

    def test_missing_explicit_file(self, tmp_path):
        with pytest.raises(ConfigError, match="does not exist"):
            load_config(tmp_path / "nope.toml")

    def test_invalid_toml(self, tmp_path):
        path = write_config(tmp_path, "[run\n")
        with pytest.raises(ConfigError, match="not valid TOML"):
            load_config(path)

    def test_to_dict_is_serialisable(self, tmp_path):
        cfg = load_config(write_config(tmp_path, "[run]\nseed = 3\n"))
        data = json.loads(json.dumps(cfg.to_dict()))
        assert data["run"]["seed"] == 3


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


class TestValidateConfig:
    def test_unknown_keys(self, tmp_path):
        cfg = load_config(write_config(tmp_path, "[distill]\nalpha = 1\n"))
        assert any("unknown key(s) in [distill]: alpha" in e for e in validate_config(cfg))

    def test_seed_only_under_run(self, tmp_path):
        cfg = load_config(write_config(tmp_path, "[distill]\nseed = 3\n"))
        assert any("seed" in e for e in validate_config(cfg))

    def test_lambdas_must_sum_to_one(self, tmp_path):
        path = write_config(
            tmp_path, "[distill]\nlambda_kd = 0.5\nlambda_mlm = 0.3\nlambda_cos = 0.1\n"
        )
        errors = validate_config(load_config(path))
        assert any("must equal 1" in e for e in errors)

    def test_bad_output_format(self):
        errors = validate_config(load_config(output_format="xml"))
        assert any("Invalid output format" in e for e in errors)

    def test_bench_reps_minimum(self, tmp_path):
        cfg = load_config(write_config(tmp_path, "[bench]\nreps = 2\n"))
        assert any("reps must be at least 3" in e for e in validate_config(cfg))

    def test_wrong_type(self, tmp_path):
        cfg = load_config(write_config(tmp_path, '[run]\nthreads = "two"\n'))
        assert any("threads must be an integer" in e for e in validate_config(cfg))

    def test_finetune_must_be_per_task(self, tmp_path):
        cfg = load_config(write_config(tmp_path, "[finetune]\nepochs = 3\n"))
        assert any("[finetune]" in e for e in validate_config(cfg))


class TestDistillConfig:
    def test_defaults_are_valid(self):
        assert DistillConfig().validate() == []

    @pytest.mark.parametrize(
        ("field", "value", "fragment"),
        [
            ("temperature", 0.0, "temperature"),
            ("mask_fraction", 1.0, "mask_fraction"),
            ("batch_size", 0, "batch_size"),
            ("warmup_fraction", 1.0, "warmup_fraction"),
            ("lambda_kd", -0.125, "non-negative"),
        ],
    )
    def test_invalid_values(self, field, value, fragment):
        errors = dataclasses.replace(DistillConfig(), **{field: value}).validate()
        assert any(fragment in e for e in errors)


class TestFinetuneHyperparams:
    def test_epochs_xor_early_stopping(self):
        assert FinetuneHyperparams().validate()
        both = FinetuneHyperparams(epochs=3, early_stopping=EarlyStopping())
        assert any("exactly one" in e for e in both.validate())
        assert FinetuneHyperparams(epochs=3).validate() == []

    def test_patience_override_switches_to_early_stopping(self):
        hp = FinetuneHyperparams(epochs=10).with_overrides({"patience": 2, "metric": "accuracy"})
        assert hp.epochs is None
        assert hp.early_stopping == EarlyStopping(metric="accuracy", patience=2)
        assert hp.validate() == []

    def test_epochs_override_drops_early_stopping(self):
        hp = FinetuneHyperparams(early_stopping=EarlyStopping()).with_overrides({"epochs": 4})
        assert (hp.epochs, hp.early_stopping) == (4, None)

    def test_unknown_override(self):
        with pytest.raises(ConfigError, match="unknown finetune keys"):
            FinetuneHyperparams(epochs=1).with_overrides({"momentum": 0.9})
