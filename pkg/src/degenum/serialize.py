"""Canonical JSON forms and validated loading.

A degree sequence is ``{"class": "bipartite", "ell": L, "n": N, "s": [...],
"t": [...]}``; digraphs omit ``ell``.  Pair lists are ``[[a, v], ...]`` or
``{"pairs": [[a, v], ...], "C": k}`` with 1-based labels.  Every loader
reports problems as ``InputError`` carrying the line and the field path.
"""

from __future__ import annotations

import json
from typing import Any

import jsonschema

from .model import DegreeSequence, GraphClass
from .realize import ForbiddenSet

_nonneg = {"type": "integer", "minimum": 0}
_pos = {"type": "integer", "minimum": 1}

SEQUENCE_SCHEMA = {
    "type": "object",
    "properties": {
        "class": {"enum": ["bipartite", "digraph"]},
        "ell": _pos,
        "n": _pos,
        "s": {"type": "array", "items": _nonneg},
        "t": {"type": "array", "items": _nonneg},
    },
    "required": ["class", "n", "s", "t"],
    "additionalProperties": False,
    "if": {"properties": {"class": {"const": "bipartite"}}},
    "then": {"required": ["ell"]},
}

_pair = {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2}

PAIRS_SCHEMA = {
    "oneOf": [
        {"type": "array", "items": _pair},
        {
            "type": "object",
            "properties": {"pairs": {"type": "array", "items": _pair}, "C": _pos},
            "required": ["pairs"],
            "additionalProperties": False,
        },
    ]
}


class InputError(ValueError):
    def __init__(self, message: str, source: str = "<input>", line: int | None = None, path: str = "$"):
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {path}: {message}")
        self.source = source
        self.line = line
        self.path = path


def _path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _key_line(text: str, key: str | None) -> int | None:
    """First line of ``text`` mentioning ``"key"`` (a best-effort locator)."""
    if key is None:
        return None
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def parse_json(text: str, source: str = "<input>", line_offset: int = 0) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc.msg} (column {exc.colno})", source, exc.lineno + line_offset) from None


def _validate(obj, schema, text: str, source: str, line_offset: int) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(obj), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        parts = list(err.absolute_path)
        key = next((p for p in reversed(parts) if isinstance(p, str)), None)
        line = _key_line(text, key)
        line = line + line_offset if line is not None else line_offset + 1
        raise InputError(err.message, source, line, _path(parts))


def seq_from_obj(obj: Any, text: str = "", source: str = "<input>", line_offset: int = 0) -> DegreeSequence:
    _validate(obj, SEQUENCE_SCHEMA, text, source, line_offset)
    n = obj["n"]
    if obj["class"] == "digraph":
        if "ell" in obj and obj["ell"] != n:
            raise InputError("digraph needs ell == n", source, _key_line(text, "ell"), "$.ell")
        gc = GraphClass.digraph(n)
    else:
        gc = GraphClass.bipartite(obj["ell"], n)
    for name, want in (("s", gc.ell), ("t", gc.n)):
        if len(obj[name]) != want:
            line = _key_line(text, name)
            raise InputError(
                f"expected {want} entries, found {len(obj[name])}",
                source,
                line + line_offset if line is not None else None,
                f"$.{name}",
            )
    return DegreeSequence(gc, tuple(obj["s"]), tuple(obj["t"]))


def seq_to_obj(d: DegreeSequence) -> dict:
    out: dict[str, Any] = {"class": d.cls.kind.value}
    if not d.cls.is_digraph:
        out["ell"] = d.cls.ell
    out.update({"n": d.cls.n, "s": list(d.s), "t": list(d.t)})
    return out


def load_sequence(text: str, source: str = "<input>") -> DegreeSequence:
    return seq_from_obj(parse_json(text, source), text, source)


def load_sequences_jsonl(text: str, source: str = "<input>") -> list[DegreeSequence]:
    out = []
    for i, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        obj = parse_json(line, source, i - 1)
        out.append(seq_from_obj(obj, line, source, i - 1))
    return out


def load_pairs(text: str, gc: GraphClass, source: str = "<input>") -> ForbiddenSet:
    obj = parse_json(text, source)
    _validate(obj, PAIRS_SCHEMA, text, source, 0)
    pairs = obj["pairs"] if isinstance(obj, dict) else obj
    C = obj.get("C") if isinstance(obj, dict) else None
    for k, (a, v) in enumerate(pairs):
        if not gc.allowable(a, v):
            raise InputError(f"pair ({a}, {v}) is not allowable", source, None, f"$[{k}]")
    try:
        return ForbiddenSet.of(gc, [tuple(p) for p in pairs], C)
    except ValueError as exc:
        raise InputError(str(exc), source, None, "$.C") from None


def pair_list(text: str, gc: GraphClass, source: str = "<input>") -> list[tuple[int, int]]:
    return list(load_pairs(text, gc, source).pairs)


def dumps(obj: Any) -> str:
    """Canonical text: sorted keys, fixed separators, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, default=_default) + "\n"


def _default(x):
    from fractions import Fraction

    import numpy as np

    if isinstance(x, Fraction):
        return {"num": str(x.numerator), "den": str(x.denominator)}
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (set, frozenset, tuple)):
        return list(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")
