"""Output formatters for report records."""

from __future__ import annotations

from .json_fmt import format_json
from .terminal import format_table

__all__ = ["format_table", "format_json", "render_report"]

FORMATS = ("table", "json")


def render_report(record: dict | list[dict], fmt: str = "table", title: str = "") -> str:
    """Render a report record using the requested format.

    Args:
        record: A mapping (rendered as key/value rows) or a list of mappings
            (rendered as one row each).
        fmt: ``"table"`` for Rich terminal output, ``"json"`` for one JSON line.
        title: Table title; ignored for JSON.

    Returns:
        A string representation of the record (may contain ANSI codes for table).
    """
    if fmt == "json":
        return format_json(record)
    return format_table(record, title=title)
