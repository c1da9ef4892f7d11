"""Canonical JSON writing shared by model files, datasets and manifests.

Byte-identical output for equal inputs: keys sorted, no whitespace, and
every float rendered as a fixed-width %.17e decimal.  Seventeen
significant digits round-trip any binary64 value exactly, so files
written here reload to bit-equal numbers with the standard json parser.
"""
from __future__ import annotations

import hashlib
import json
import math
from typing import Any


def _write(obj: Any, out: list[str]) -> None:
    if obj is None or obj is True or obj is False:
        out.append("null" if obj is None else "true" if obj else "false")
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=True))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite float {obj!r} is not serializable")
        out.append(format(obj, ".17e"))
    elif isinstance(obj, dict):
        out.append("{")
        for k, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"non-string key {key!r}")
            if k:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=True))
            out.append(":")
            _write(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for k, item in enumerate(obj):
            if k:
                out.append(",")
            _write(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj: Any) -> str:
    parts: list[str] = []
    _write(obj, parts)
    return "".join(parts)


def canonical_json_bytes(obj: Any) -> bytes:
    return canonical_json(obj).encode("ascii")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def load_json(path) -> Any:
    with open(path, "r", encoding="ascii") as fh:
        return json.load(fh)


def dump_json(obj: Any, path) -> bytes:
    """Write canonical JSON to path and return the exact bytes written."""
    data = canonical_json_bytes(obj)
    with open(path, "wb") as fh:
        fh.write(data)
    return data
