"""Tests for table and JSON report rendering."""

from __future__ import annotations

import json

from distilkit.formatters import format_json, format_table, render_report


class TestFormatJson:
    def test_single_line(self):
        out = format_json({"task": "sts", "scores": {"pearson": 0.5}})
        assert "\n" not in out
        assert json.loads(out) == {"task": "sts", "scores": {"pearson": 0.5}}

    def test_non_finite_becomes_null(self):
        out = json.loads(format_json({"pearson": float("nan"), "rows": [float("inf"), 1.0]}))
        assert out == {"pearson": None, "rows": [None, 1.0]}

    def test_keeps_diacritics(self):
        assert "București" in format_json({"city": "București"})


class TestFormatTable:
    def test_nested_keys_are_flattened(self):
        out = format_table({"dev": {"accuracy": 0.5}, "epochs": 3}, title="finetune")
        assert "finetune" in out
        assert "dev.accuracy" in out
        assert "0.5000" in out

    def test_none_shows_dash(self):
        assert "—" in format_table({"regression_loyalty": None})

    def test_list_of_rows(self):
        out = format_table([{"model": "a", "length": 8}, {"model": "b", "length": 16}])
        assert "model" in out and "length" in out
        assert "16" in out

    def test_per_teacher_rows(self):
        out = format_table({"per_teacher": [{"label_loyalty": 1.0}, {"label_loyalty": 0.0}]})
        assert "per_teacher.1.label_loyalty" in out


class TestRenderReport:
    def test_dispatch(self):
        record = {"a": 1}
        assert render_report(record, "json") == '{"a": 1}'
        assert "Key" in render_report(record, "table")
