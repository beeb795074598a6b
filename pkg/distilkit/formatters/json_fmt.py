"""JSON formatter for machine-readable reports."""

from __future__ import annotations

import json
import math


def _clean(value: object) -> object:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_clean(v) for v in value]
    return value


def format_json(record: dict | list[dict]) -> str:
    """Render the record as a single JSON line; NaN and infinities become ``null``."""
    return json.dumps(_clean(record), ensure_ascii=False)
