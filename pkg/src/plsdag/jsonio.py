"""Deterministic JSON output: sorted keys, floats at 17 significant digits."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = "%.17g" % x
    # keep floats recognisable as floats after a round trip
    return s if any(c in s for c in ".e") else s + ".0"


def dumps(obj, indent: int | None = 2) -> str:
    pad = "" if indent is None else "\n"
    colon = ":" if indent is None else ": "

    def enc(o, level):
        ind = "" if indent is None else " " * (indent * (level + 1))
        end = "" if indent is None else " " * (indent * level)
        if isinstance(o, (bool, np.bool_)):
            return "true" if o else "false"
        if o is None:
            return "null"
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            return _float(float(o))
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, np.ndarray):
            return enc(o.tolist(), level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{ind}{json.dumps(str(k))}{colon}{enc(v, level + 1)}" for k, v in sorted(o.items(), key=lambda kv: str(kv[0]))]
            return "{" + pad + ("," + pad).join(items) + pad + end + "}"
        if isinstance(o, (list, tuple, set, frozenset)):
            seq = sorted(o) if isinstance(o, (set, frozenset)) else o
            if not seq:
                return "[]"
            items = [f"{ind}{enc(v, level + 1)}" for v in seq]
            return "[" + pad + ("," + pad).join(items) + pad + end + "]"
        raise TypeError(f"cannot serialise {type(o).__name__}")

    return enc(obj, 0)


def decode_floats(obj):
    """Inverse of the string encoding used for non-finite floats."""
    if isinstance(obj, dict):
        return {k: decode_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [decode_floats(v) for v in obj]
    if obj in ("inf", "-inf", "nan"):
        return float(obj)
    return obj


def write(path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n")


def load_schema(command: str) -> dict:
    """Published output schema for a CLI command."""
    from importlib.resources import files

    return json.loads(files("plsdag").joinpath("schemas", f"{command}.schema.json").read_text())
