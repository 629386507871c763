"""Deterministic JSON serialization with fixed-width float formatting.

Reports must be byte-identical across repeated runs, so every float is
printed through one %.17g format (full round-trip precision) and dictionary
order is the construction order.
"""
from __future__ import annotations

import math

_FLOAT = "%.17g"


def fmt_float(x: float) -> str:
    if isinstance(x, float) and not math.isfinite(x):
        return '"%s"' % repr(x)  # nan/inf are not JSON numbers
    return _FLOAT % x


def _escape(s: str) -> str:
    out = []
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ord(ch) < 0x20:
            out.append("\\u%04x" % ord(ch))
        else:
            out.append(ch)
    return "".join(out)


def dumps(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return '"%s"' % _escape(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(
            '%s  "%s": %s' % (pad, _escape(str(k)), dumps(v, indent + 1)) for k, v in obj.items()
        )
        return "{\n%s\n%s}" % (inner, pad)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        inner = ",\n".join("%s  %s" % (pad, dumps(v, indent + 1)) for v in obj)
        return "[\n%s\n%s]" % (inner, pad)
    # numpy scalars and anything float-like
    try:
        return fmt_float(float(obj))
    except (TypeError, ValueError):
        raise TypeError(f"cannot serialize {type(obj)!r}")


def write_report(path, obj) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(obj) + "\n")
