"""Deterministic serialization: JSON summaries and CSV tables.

Floats are rendered with 17 significant digits (bit-faithful round trips);
dictionary keys are emitted sorted, so identical inputs produce byte-identical
documents.  Non-finite floats are rendered as the strings "NaN",
"Infinity", "-Infinity" (strict JSON has no literals for them).
"""

import math

import numpy as np

__all__ = ["dumps_json", "format_float", "csv_table"]


def format_float(x):
    x = float(x)
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    return format(x, ".17g")


def _escape(s):
    out = []
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    return "".join(out)


def _serialize(obj, parts, indent, level):
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if obj is None:
        parts.append("null")
    elif isinstance(obj, bool) or isinstance(obj, np.bool_):
        parts.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        parts.append(format_float(obj))
    elif isinstance(obj, str):
        parts.append(f'"{_escape(obj)}"')
    elif isinstance(obj, np.ndarray):
        _serialize(obj.tolist(), parts, indent, level)
    elif isinstance(obj, (list, tuple)):
        if not obj:
            parts.append("[]")
            return
        parts.append("[\n")
        for i, item in enumerate(obj):
            parts.append(pad_in)
            _serialize(item, parts, indent, level + 1)
            parts.append(",\n" if i + 1 < len(obj) else "\n")
        parts.append(pad + "]")
    elif isinstance(obj, dict):
        if not obj:
            parts.append("{}")
            return
        parts.append("{\n")
        keys = sorted(obj.keys())
        for i, k in enumerate(keys):
            if not isinstance(k, str):
                raise TypeError(f"JSON keys must be strings, got {type(k)}")
            parts.append(f'{pad_in}"{_escape(k)}": ')
            _serialize(obj[k], parts, indent, level + 1)
            parts.append(",\n" if i + 1 < len(keys) else "\n")
        parts.append(pad + "}")
    else:
        raise TypeError(f"cannot serialize {type(obj)} deterministically")


def dumps_json(obj, indent=2):
    parts = []
    _serialize(obj, parts, indent, 0)
    return "".join(parts) + "\n"


def csv_table(columns, rows):
    """CSV text with a header row; floats at 17 significant digits."""
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (float, np.floating)):
                x = float(v)
                cells.append("nan" if math.isnan(x) else format(x, ".17g"))
            elif isinstance(v, (bool, np.bool_)):
                cells.append("true" if v else "false")
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
