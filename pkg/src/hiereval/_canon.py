"""Canonical text encoding shared by journal lines, tree files, and reports.

Canonical JSON here means: keys sorted, no insignificant whitespace, and
every number rendered positionally (no exponent, '.' decimal separator)
so that re-serializing parsed data is byte-stable.
"""

from __future__ import annotations

import json
import math
from decimal import Decimal
from typing import Any


def format_number(value: int | float) -> str:
    """Render a number as positional decimal text, round-trip exact."""
    if isinstance(value, bool):
        raise TypeError("bool is not a JSON number")
    if isinstance(value, int):
        return str(value)
    if not math.isfinite(value):
        raise ValueError(f"non-finite number cannot be serialized: {value!r}")
    text = repr(value)
    if "e" in text or "E" in text:
        # repr() switches to exponent notation below 1e-4 and above 1e16
        text = format(Decimal(text), "f")
    return text


def dumps(obj: Any) -> str:
    """Serialize to canonical JSON."""
    out: list[str] = []
    _write(obj, out)
    return "".join(out)


def _write(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, (int, float)):
        out.append(format_number(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"object keys must be strings, got {key!r}")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _write(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, element in enumerate(obj):
            if i:
                out.append(",")
            _write(element, out)
        out.append("]")
    else:
        raise TypeError(f"not canonically serializable: {type(obj).__name__}")
