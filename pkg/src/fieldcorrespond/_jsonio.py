"""Deterministic JSON writing with fixed-precision floats.

Every float is rendered with 17 significant digits, which round-trips
IEEE doubles exactly and keeps file bytes reproducible across runs.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np


def format_float(x: float) -> str:
    s = format(float(x), ".17g")
    # '.17g' may emit 'inf'/'nan', which are not valid JSON.
    if s in ("inf", "-inf", "nan") or "inf" in s or "nan" in s:
        raise ValueError(f"cannot serialize non-finite float {x!r} to JSON")
    return s


def _render(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for k, v in obj.items():
            if not isinstance(k, str):
                raise TypeError(f"JSON object keys must be str, got {type(k).__name__}")
            items.append(f"{pad_in}{json.dumps(k)}: {_render(v, indent, level + 1)}")
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)) or isinstance(obj, np.ndarray):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else list(obj)
        if not seq:
            return "[]"
        # Short numeric lists stay on one line; nested structures get split.
        if all(isinstance(v, (int, float, np.integer, np.floating)) for v in seq):
            return "[" + ", ".join(_render(v, indent, level + 1) for v in seq) + "]"
        items = [f"{pad_in}{_render(v, indent, level + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


def dumps_json(obj: Any, indent: int = 2) -> str:
    return _render(obj, indent, 0) + "\n"


def dump_json(obj: Any, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_json(obj))


def load_json(path) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
