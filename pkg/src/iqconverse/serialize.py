"""Deterministic JSON and CSV output.

Floats are written with 17 significant digits so identical inputs give
byte-identical files and every value round-trips exactly.  Non-finite
floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``; complex
numbers become ``{"re": .., "im": ..}``.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import is_dataclass
from pathlib import Path

import numpy as np

from .lti import FrequencyResponse


def format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = format(x, ".17g")
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def _plain(obj):
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if is_dataclass(obj):
        raise TypeError(f"{type(obj).__name__} has no JSON form")
    return obj


def _encode(obj, indent: int, level: int) -> str:
    obj = _plain(obj)
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, complex):
        return _encode({"re": obj.real, "im": obj.imag}, indent, level)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [_encode(v, indent, level + 1) for v in obj]
        if all(not isinstance(_plain(v), (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(parts) + "]"
        return "[\n" + ",\n".join(pad + p for p in parts) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def write_json(obj, path: str | Path | None = None) -> str:
    text = dumps(obj)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def read_json(source: str | Path) -> dict:
    """Parse a JSON file, or an inline JSON document when ``source`` starts with ``{``."""
    text = str(source)
    if text.lstrip().startswith(("{", "[")):
        return json.loads(text)
    with open(text, encoding="utf-8") as fh:
        return json.load(fh)


def response_csv(resp: FrequencyResponse) -> str:
    """CSV with ``omega`` then row-major ``g_{i}{j}_re``, ``g_{i}{j}_im`` columns (1-based)."""
    values = resp.values
    ny, nu = values.shape[1:]
    header = ["omega"]
    for i in range(ny):
        for j in range(nu):
            header += [f"g_{i + 1}{j + 1}_re", f"g_{i + 1}{j + 1}_im"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for w, mat in zip(resp.grid.points, values):
        row = [format(float(w), ".17g")]
        for x in mat.ravel():
            row += [format(float(x.real), ".17g"), format(float(x.imag), ".17g")]
        writer.writerow(row)
    return buf.getvalue()
