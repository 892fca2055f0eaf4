"""File helpers: points files, JSON with 17 significant digits, CSV tables."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ParseError


def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return json.dumps(str(x))
    return f"{x:.17g}"


def dumps(obj, indent: int = 2) -> str:
    """JSON text in which every float carries 17 significant digits."""
    return _dump(obj, 0, indent) + "\n"


def _dump(obj, level, indent):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dump(v, level + 1, indent)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(_dump(v, level + 1, indent) for v in obj) + "]"
        items = [pad + _dump(v, level + 1, indent) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _complex(v) -> complex:
    if isinstance(v, bool):
        raise ParseError(f"not a number: {v!r}")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, str):
        try:
            return complex(v.replace(" ", ""))
        except ValueError as exc:
            raise ParseError(f"not a complex number: {v!r}") from exc
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(c, (int, float)) for c in v):
        return complex(v[0], v[1])
    raise ParseError(f"not a complex number: {v!r}")


def parse_points(rows, n: int, name: str) -> np.ndarray:
    if not isinstance(rows, list):
        raise ParseError(f"'{name}' must be a list of points")
    out = np.empty((len(rows), n), dtype=complex)
    for k, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"{name}[{k}] must list {n} coordinates")
        out[k] = [_complex(c) for c in row]
    return out


def load_points(path, n: int) -> tuple[np.ndarray | None, np.ndarray | None]:
    """Read ``{"z": [...], "omega": [...]}``; coordinates are numbers, ``[re, im]`` pairs or strings."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read points file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError("points file must hold a JSON object")
    z = parse_points(data["z"], n, "z") if "z" in data else None
    omega = parse_points(data["omega"], n, "omega") if "omega" in data else None
    return z, omega


def point_record(point) -> list:
    return [[float(complex(c).real), float(complex(c).imag)] for c in point]
