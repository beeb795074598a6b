"""Tests for line cleaning, the language gate, stats and deduplicating merges."""

from __future__ import annotations

import numpy as np
import pytest

from distilkit.corpus import (
    CleaningRules,
    CorpusStats,
    Drop,
    DropReason,
    Keep,
    clean_file,
    clean_files,
    clean_line,
    corpus_stats,
    dedup_merge,
    language_gate,
    line_digest,
    load_rules,
    strip_artifacts,
)
from distilkit.errors import CorpusIOError, FormatError

RO_LINE = "Mâine vom merge la munte, unde este foarte frumos și liniștit."
EN_LINE = "The weather is very nice today and we are going to the mountains with friends."


@pytest.fixture
def rules():
    return CleaningRules(language_gate=False, named_entities=("București", "Cluj"))


# ---------------------------------------------------------------------------
# clean_line
# ---------------------------------------------------------------------------


class TestCleanLine:
    def test_diacritic_noise(self, rules):
        assert clean_line("c?nd plec acasă", rules) == Drop(DropReason.DIACRITIC_NOISE)

    def test_question_mark_at_word_end_is_kept(self, rules):
        assert clean_line("Când plecăm acasă?", rules) == Keep("Când plecăm acasă?")

    def test_uncapitalized_named_entity(self, rules):
        decision = clean_line("am fost în bucurești ieri", rules)
        assert decision == Drop(DropReason.UNCAPITALIZED_NE)

    def test_capitalized_named_entity_is_kept(self, rules):
        assert isinstance(clean_line("am fost în București ieri", rules), Keep)

    def test_entity_must_be_whole_word(self, rules):
        assert isinstance(clean_line("clujean de felul lui", rules), Keep)

    def test_artifact_prefix_is_stripped(self, rules):
        decision = clean_line("Articolul Anterior Guvernul a decis…", rules)
        assert decision == Keep("Guvernul a decis…")

    def test_artifact_suffix_is_stripped(self, rules):
        decision = clean_line("Guvernul a decis. Citește mai mult", rules)
        assert decision == Keep("Guvernul a decis.")

    def test_only_artifacts_is_empty(self, rules):
        assert clean_line("  Publicitate  ", rules) == Drop(DropReason.EMPTY)

    def test_strip_repeats_until_stable(self, rules):
        assert strip_artifacts("Publicitate: Sursa foto - Text util", rules) == "Text util"

    def test_cleaning_is_idempotent(self, rules):
        lines = ["Articolul Anterior Guvernul a decis…", "Text simplu", "Citeste si: Ceva"]
        once = [d.line for d in map(lambda x: clean_line(x, rules), lines) if isinstance(d, Keep)]
        twice = [clean_line(x, rules) for x in once]
        assert [d.line for d in twice] == once

    def test_gate_drops_english(self):
        decision = clean_line(EN_LINE, CleaningRules(named_entities=()))
        assert decision == Drop(DropReason.NOT_ROMANIAN)

    def test_gate_keeps_romanian(self):
        assert clean_line(RO_LINE, CleaningRules(named_entities=())) == Keep(RO_LINE)


class TestLanguageGate:
    def test_romanian_scores_high(self):
        assert language_gate(RO_LINE) > 0.5
        assert language_gate("Guvernul a decis să majoreze pensiile de anul viitor.") > 0.5

    def test_english_scores_low(self):
        assert language_gate(EN_LINE) < 0.5

    def test_empty_line_scores_zero(self):
        assert language_gate("") == 0.0
        assert language_gate("1234 !!!") == 0.0


# ---------------------------------------------------------------------------
# Rules
# ---------------------------------------------------------------------------


class TestRules:
    def test_load_rules_from_toml(self, tmp_path):
        (tmp_path / "ne.txt").write_text("# entities\nIași\n", encoding="utf-8")
        path = tmp_path / "rules.toml"
        path.write_text(
            "[cleaning]\n"
            "language_gate = false\n"
            'named_entities = ["Arad"]\n'
            'named_entities_file = "ne.txt"\n',
            encoding="utf-8",
        )
        rules = load_rules(path)
        assert rules.named_entities == ("Arad", "Iași")
        assert rules.language_gate is False

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "rules.toml"
        path.write_text("colour = true\n")
        with pytest.raises(FormatError, match="colour"):
            load_rules(path)

    def test_lowercase_entity_rejected(self):
        with pytest.raises(FormatError, match="capital"):
            CleaningRules.from_dict({"named_entities": ["arad"]})

    def test_threshold_range(self):
        assert CleaningRules(language_threshold=1.5).validate()

    def test_invalid_toml(self, tmp_path):
        path = tmp_path / "rules.toml"
        path.write_text("[cleaning\n")
        with pytest.raises(FormatError):
            load_rules(path)


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------


class TestCorpusStats:
    def test_hand_count(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_bytes(b"a b\nc\n")
        assert corpus_stats(path) == CorpusStats(lines=2, words=3, bytes=6)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_bytes(b"")
        assert corpus_stats(path) == CorpusStats()

    def test_multibyte_characters_count_bytes(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("și\n", encoding="utf-8")
        assert corpus_stats(path).bytes == 4

    def test_stats_add(self):
        assert CorpusStats(1, 2, 3) + CorpusStats(4, 5, 6) == CorpusStats(5, 7, 9)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CorpusIOError, match="missing.txt"):
            corpus_stats(tmp_path / "missing.txt")


class TestCleanFile:
    def test_report_counts(self, tmp_path, rules):
        src = tmp_path / "raw.txt"
        src.write_text("Text bun\nc?nd\n\nam fost în cluj\nAlt text\n", encoding="utf-8")
        dst = tmp_path / "clean.txt"
        report = clean_file(src, dst, rules)
        assert dst.read_text(encoding="utf-8") == "Text bun\nAlt text\n"
        assert report.kept == 2
        assert report.dropped == {
            DropReason.DIACRITIC_NOISE: 1,
            DropReason.EMPTY: 1,
            DropReason.UNCAPITALIZED_NE: 1,
        }
        assert report.to_dict()["dropped"]["empty"] == 1

    def test_invalid_utf8_names_file(self, tmp_path, rules):
        src = tmp_path / "raw.txt"
        src.write_bytes(b"ok\n\xff\xfe\n")
        with pytest.raises(CorpusIOError, match="raw.txt:2"):
            clean_file(src, tmp_path / "out.txt", rules)
        assert not (tmp_path / "out.txt").exists()

    def test_parallel_reports_keep_job_order(self, tmp_path, rules):
        jobs = []
        for i in range(4):
            src = tmp_path / f"in{i}.txt"
            src.write_text("linie\n" * (i + 1), encoding="utf-8")
            jobs.append((src, tmp_path / f"out{i}.txt"))
        reports = clean_files(jobs, rules, workers=3)
        assert [r.kept for r in reports] == [1, 2, 3, 4]


class TestDedupMerge:
    def test_identical_files(self, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        a.write_text("x\ny\n")
        b.write_text("x\ny\n")
        out = tmp_path / "m.txt"
        dedup_merge([a, b], out)
        assert out.read_text() == "x\ny\n"

    def test_disjoint_files(self, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        a.write_text("x\ny\n")
        b.write_text("z\n")
        assert dedup_merge([a, b], tmp_path / "m.txt").lines == 3

    def test_first_occurrence_wins_after_trimming(self, tmp_path):
        a = tmp_path / "a.txt"
        a.write_text("L\nM\nL  \nN\n")
        out = tmp_path / "m.txt"
        dedup_merge([a], out)
        lines = out.read_text().splitlines()
        assert lines == ["L", "M", "N"]
        assert len(set(lines)) == len(lines)


# ---------------------------------------------------------------------------
# Fuzzed corpus
# ---------------------------------------------------------------------------

FUZZ_PIECES = (
    "Articolul Anterior", "Citește mai mult", "Publicitate:", "Sursa foto -", "Click aici",
    "Guvernul", "a decis", "să majoreze", "pensiile", "la munte", "și", "foarte frumos",
    "c?nd", "cluj", "Cluj", "The weather", "is nice", "»", "|", "…", "123", "\t", "",
)


def write_fuzz_corpus(path, num_lines: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    with open(path, "w", encoding="utf-8") as fh:
        for _ in range(num_lines):
            pieces = rng.choice(FUZZ_PIECES, size=int(rng.integers(0, 9)))
            fh.write(" ".join(pieces) + "\n")


@pytest.mark.slow
class TestFuzzCorpus:
    def test_clean_is_idempotent_and_merge_unique(self, tmp_path, rules):
        raw = tmp_path / "raw.txt"
        write_fuzz_corpus(raw, 100_000, seed=3)
        once, twice = tmp_path / "once.txt", tmp_path / "twice.txt"
        first = clean_file(raw, once, rules)
        second = clean_file(once, twice, rules)
        assert first.kept > 0
        assert second.total_dropped == 0
        assert twice.read_bytes() == once.read_bytes()

        merged = tmp_path / "merged.txt"
        dedup_merge([once, twice], merged)
        digests = [line_digest(line) for line in merged.read_text(encoding="utf-8").splitlines()]
        assert len(digests) == len(set(digests))
        assert set(merged.read_text(encoding="utf-8").splitlines()) == set(
            once.read_text(encoding="utf-8").splitlines()
        )
