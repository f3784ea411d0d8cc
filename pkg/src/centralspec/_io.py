"""Output helpers: 17-significant-digit floats in CSV and JSON."""

import json
import math

import numpy as np


def fmt(v):
    return format(float(v), ".17g")


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            raise ValueError("non-finite float in JSON output")
        return fmt(obj)
    if obj is None:
        return "null"
    return json.dumps(obj)


def dumps(obj, indent=2):
    """JSON text with every float written at 17 significant digits."""
    return _encode(obj, indent, 0)


def dump(obj, path, indent=2):
    with open(path, "w") as fh:
        fh.write(dumps(obj, indent))
        fh.write("\n")
