"""Report writers: JSON and CSV with floats at 17 significant digits."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["dump_json", "write_csv", "fmt_float"]


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _emit(obj, parts: list[str], indent: int) -> None:
    pad = "  " * indent
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, np.bool_):
        parts.append("true" if bool(obj) else "false")
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        parts.append(fmt_float(float(obj)))
    elif isinstance(obj, complex):
        _emit({"re": obj.real, "im": obj.imag}, parts, indent)
    elif isinstance(obj, str):
        parts.append('"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"')
    elif isinstance(obj, dict):
        if not obj:
            parts.append("{}")
            return
        parts.append("{\n")
        items = list(obj.items())
        for k, v in items[:-1]:
            parts.append(f'{pad}  "{k}": ')
            _emit(v, parts, indent + 1)
            parts.append(",\n")
        k, v = items[-1]
        parts.append(f'{pad}  "{k}": ')
        _emit(v, parts, indent + 1)
        parts.append(f"\n{pad}}}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            parts.append("[]")
            return
        parts.append("[")
        for v in seq[:-1]:
            _emit(v, parts, indent)
            parts.append(", ")
        _emit(seq[-1], parts, indent)
        parts.append("]")
    else:
        raise TypeError(f"cannot serialise {type(obj)!r}")


def dump_json(obj) -> str:
    """JSON text with every float rendered at 17 significant digits.
    NaN and infinities follow the json module's extended literals."""
    parts: list[str] = []
    _emit(obj, parts, 0)
    parts.append("\n")
    return "".join(parts)


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = [fmt_float(v) if isinstance(v, (float, np.floating)) else str(v)
                     for v in row]
            fh.write(",".join(cells) + "\n")
