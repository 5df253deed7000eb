"""ISO-10303-21 (STEP physical file) serialization for the IFC entity graph."""
from __future__ import annotations

import datetime
import math
from pathlib import Path

from .model import APP_NAME, APP_VERSION, EnumVal, IfcModel, Ref, SCHEMA, Typed, VIEW_DEFINITION, _Star

_DETERMINISTIC_STAMP = "1970-01-01T00:00:00"


def format_real(x: float) -> str:
    """STEP real literal: up to 12 significant digits, plain decimal notation
    inside [1e-3, 1e7), exponent form outside."""
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        raise ValueError("cannot serialize non-finite real")
    if x == 0:
        return "0."
    ax = abs(x)
    if 1e-3 <= ax < 1e7:
        s = f"{x:.12g}"
        if "e" in s or "E" in s:  # %g may switch despite the range; force plain
            s = f"{x:.12f}".rstrip("0")
        if "." not in s:
            s += "."
        return s
    # out of range: explicit exponent form with 12 significant digits
    mantissa, _, exp = f"{x:.11E}".partition("E")
    mantissa = mantissa.rstrip("0")
    if mantissa.endswith("."):
        mantissa += "0"
    return f"{mantissa}E{exp}"


def encode_string(s: str) -> str:
    """Apostrophe-delimited STEP string with basic escaping."""
    out = []
    for ch in s:
        if ch == "'":
            out.append("''")
        elif ch == "\\":
            out.append("\\\\")
        elif ord(ch) < 128:
            out.append(ch)
        else:
            out.append(f"\\X2\\{ord(ch):04X}\\X0\\")
    return "'" + "".join(out) + "'"


def _format_value(v) -> str:
    if v is None:
        return "$"
    if isinstance(v, _Star):
        return "*"
    if isinstance(v, Ref):
        return f"#{v.id}"
    if isinstance(v, EnumVal):
        return f".{v.name}."
    if isinstance(v, Typed):
        return f"{v.type_name}({_format_value(v.value)})"
    if isinstance(v, bool):
        return ".T." if v else ".F."
    if isinstance(v, str):
        return encode_string(v)
    if isinstance(v, float):
        return format_real(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, (list, tuple)):
        return "(" + ",".join(_format_value(x) for x in v) + ")"
    raise TypeError(f"cannot serialize attribute value of type {type(v)!r}")


def serialize(model: IfcModel, file_name: str = "model.ifc") -> str:
    stamp = _DETERMINISTIC_STAMP if model.deterministic else datetime.datetime.now().isoformat(timespec="seconds")
    author = " ".join(p for p in (model.meta.author_name, model.meta.author_surname) if p)
    lines = [
        "ISO-10303-21;",
        "HEADER;",
        f"FILE_DESCRIPTION(({encode_string(VIEW_DEFINITION)}),'2;1');",
        "FILE_NAME({},{},({}),({}),{},{},{});".format(
            encode_string(file_name),
            encode_string(stamp),
            encode_string(author),
            encode_string(model.meta.organization),
            encode_string(f"{APP_NAME} {APP_VERSION}"),
            encode_string(f"{APP_NAME} {APP_VERSION}"),
            encode_string(""),
        ),
        f"FILE_SCHEMA(('{SCHEMA}'));",
        "ENDSEC;",
        "DATA;",
    ]
    for eid in sorted(model.entities):
        type_name, args = model.entities[eid]
        body = ",".join(_format_value(a) for a in args)
        lines.append(f"#{eid}={type_name}({body});")
    lines.append("ENDSEC;")
    lines.append("END-ISO-10303-21;")
    return "\n".join(lines) + "\n"


def write_step(model: IfcModel, path) -> Path:
    path = Path(path)
    path.write_text(serialize(model, file_name=path.name), encoding="ascii")
    return path
