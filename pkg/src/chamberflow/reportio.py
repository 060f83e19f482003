"""Deterministic JSON / CSV / SVG emission for CLI reports.

Floats are rendered with 17 significant digits so serialized reports are
byte-stable round-trip representations of the underlying doubles.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np


def _fmt_float(x: float) -> str:
    if x != x:
        return "NaN"
    if x == float("inf"):
        return "Infinity"
    if x == float("-inf"):
        return "-Infinity"
    return format(float(x), ".17g")


def to_json(obj, indent: int = 0) -> str:
    """Serialize dicts/lists/scalars with fixed-precision floats."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}{json.dumps(str(k))}: {to_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(np.asarray(obj).tolist()) if isinstance(obj, np.ndarray) else list(obj)
        if not seq:
            return "[]"
        items = [f"{inner}{to_json(v, indent + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    return json.dumps(str(obj))


def config_hash(config_dict: dict) -> str:
    """Stable hash of a config mapping (timestamps must not be included)."""
    return hashlib.sha256(to_json(config_dict).encode()).hexdigest()[:16]


def matrix_to_json(mat: np.ndarray) -> dict:
    return {"n": int(mat.shape[0]), "rows": [list(row) for row in np.asarray(mat)]}


def matrix_from_json(obj: dict) -> np.ndarray:
    mat = np.asarray(obj["rows"], dtype=float)
    if mat.shape != (obj["n"], obj["n"]):
        raise ValueError("matrix rows do not match the declared size")
    return mat


def flag_to_json(flag) -> dict:
    return {"rep": matrix_to_json(flag.rep), "canonical": True}


def cone_csv(rows) -> str:
    """CSV of cone samples: word_id, length, lambda_*, dir_x, dir_y."""
    if not rows:
        return "word_id,length\n"
    n = len(rows[0]["lambda"])
    header = ["word_id", "length"] + [f"lambda_{i + 1}" for i in range(n)] + ["dir_x", "dir_y"]
    lines = [",".join(header)]
    for row in rows:
        cells = [str(row["word_id"]), str(row["length"])]
        cells += [_fmt_float(v) for v in row["lambda"]]
        cells += [_fmt_float(row["dir_x"]), _fmt_float(row["dir_y"])]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def cone_svg(points, hull, size: int = 480) -> str:
    """Minimal deterministic SVG: unit-circle directions plus hull rays.

    points and hull are lists of 2-D unit vectors.
    """
    half = size / 2.0
    scale = 0.45 * size

    def sx(p):
        return _fmt_float(half + scale * p[0])

    def sy(p):
        return _fmt_float(half - scale * p[1])

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<circle cx="{_fmt_float(half)}" cy="{_fmt_float(half)}" r="{_fmt_float(scale)}" '
        'fill="none" stroke="#cccccc"/>',
    ]
    for h in hull:
        parts.append(
            f'<line x1="{_fmt_float(half)}" y1="{_fmt_float(half)}" '
            f'x2="{sx(h)}" y2="{sy(h)}" stroke="#d62728" stroke-width="2"/>'
        )
    for p in points:
        parts.append(f'<circle cx="{sx(p)}" cy="{sy(p)}" r="2" fill="#1f77b4"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
