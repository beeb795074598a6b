"""Rich terminal table formatter for reports."""

from __future__ import annotations

from io import StringIO

from rich.console import Console
from rich.table import Table


def _cell(value: object) -> str:
    if value is None:
        return "—"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def _flatten(record: dict, prefix: str = "") -> list[tuple[str, object]]:
    rows: list[tuple[str, object]] = []
    for key, value in record.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            rows.extend(_flatten(value, f"{name}."))
        elif isinstance(value, list) and value and all(isinstance(v, dict) for v in value):
            for i, item in enumerate(value):
                rows.extend(_flatten(item, f"{name}.{i}."))
        else:
            rows.append((name, value))
    return rows


def format_table(record: dict | list[dict], *, title: str = "") -> str:
    """Render the record as a Rich table and return the string output."""
    table = Table(
        title=title or None,
        show_header=True,
        header_style="bold cyan",
        expand=False,
        box=None,
        show_edge=True,
        padding=(0, 1),
    )

    if isinstance(record, list):
        columns = list(dict.fromkeys(k for row in record for k in row))
        for column in columns:
            table.add_column(column, no_wrap=True)
        for row in record:
            table.add_row(*(_cell(row.get(c)) for c in columns))
    else:
        table.add_column("Key", style="bold", no_wrap=True)
        table.add_column("Value", no_wrap=False)
        for key, value in _flatten(record):
            table.add_row(key, _cell(value))

    buf = StringIO()
    console = Console(file=buf, highlight=False, width=120)
    console.print(table)
    return buf.getvalue()
