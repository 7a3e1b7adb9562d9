"""Canonical JSON and XML forms for formulas, plus clause-per-line streams.

Both writers are byte-deterministic: fixed key order, fixed separators, and
attribute order matching field order.  Parsers accept exactly what the
writers produce plus insignificant JSON whitespace.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from decimal import Decimal, InvalidOperation
from typing import Iterable, Iterator

from .errors import ParseError, UnknownOp, VersionMismatch
from .invariants import (
    FALSE,
    TRUE,
    And,
    BigAnd,
    Edge,
    Event,
    Implies,
    Invariant,
    Not,
    Occupy3DBox,
    OccupyBox,
    OccupyPoint,
    Or,
    Owner,
    Quantity,
    TimeInterval,
    TimePoint,
    Transition,
    clauses_to_invariant,
    normalize,
    to_clauses,
)

FORMAT_VERSION = "gridspace-inv/1"

JSON_EXTENSION = ".inv.json"
XML_EXTENSION = ".inv.xml"
NDJSON_EXTENSION = ".inv.ndjson"

_INT_FIELDS = {
    "TimePoint": ("t",),
    "TimeInterval": ("t1", "t2"),
    "OccupyPoint": ("x", "y"),
    "OccupyBox": ("x1", "y1", "x2", "y2"),
    "Occupy3DBox": ("x1", "y1", "z1", "x2", "y2", "z2"),
}
_STR_FIELDS = {
    "Owner": ("tag",),
    "Event": ("tag",),
    "Edge": ("source", "target"),
    "Transition": ("source", "event", "target"),
}


def _node_to_obj(inv: Invariant) -> dict:
    if isinstance(inv, And):
        return {"op": "AND", "left": _node_to_obj(inv.left), "right": _node_to_obj(inv.right)}
    if isinstance(inv, Or):
        return {"op": "OR", "left": _node_to_obj(inv.left), "right": _node_to_obj(inv.right)}
    if isinstance(inv, Not):
        return {"op": "NOT", "inner": _node_to_obj(inv.inner)}
    if isinstance(inv, Implies):
        return {"op": "IMPLIES", "guard": _node_to_obj(inv.guard), "body": _node_to_obj(inv.body)}
    if isinstance(inv, BigAnd):
        return {"op": "BIGAND", "items": [_node_to_obj(i) for i in inv.items]}
    if inv == TRUE:
        return {"op": "TRUE"}
    if inv == FALSE:
        return {"op": "FALSE"}
    if isinstance(inv, TimePoint):
        return {"op": "TimePoint", "t": inv.t}
    if isinstance(inv, TimeInterval):
        return {"op": "TimeInterval", "t1": inv.t1, "t2": inv.t2}
    if isinstance(inv, Owner):
        return {"op": "Owner", "tag": inv.tag}
    if isinstance(inv, Event):
        return {"op": "Event", "tag": inv.tag}
    if isinstance(inv, OccupyPoint):
        return {"op": "OccupyPoint", "x": inv.x, "y": inv.y}
    if isinstance(inv, OccupyBox):
        return {"op": "OccupyBox", "x1": inv.x1, "y1": inv.y1, "x2": inv.x2, "y2": inv.y2}
    if isinstance(inv, Occupy3DBox):
        return {
            "op": "Occupy3DBox",
            "x1": inv.x1, "y1": inv.y1, "z1": inv.z1,
            "x2": inv.x2, "y2": inv.y2, "z2": inv.z2,
        }
    if isinstance(inv, Edge):
        return {"op": "Edge", "source": inv.source, "target": inv.target}
    if isinstance(inv, Transition):
        return {"op": "Transition", "source": inv.source, "event": inv.event, "target": inv.target}
    if isinstance(inv, Quantity):
        return {"op": "Quantity", "kind": inv.kind, "value": str(inv.value), "unit": inv.unit}
    raise TypeError(f"not a serializable node: {type(inv).__name__}")


def serialize_json_node(inv: Invariant) -> str:
    """The bare canonical JSON text of one node tree."""
    return json.dumps(_node_to_obj(inv), separators=(",", ": "))


def serialize_json(inv: Invariant) -> str:
    """The canonical versioned JSON document for a formula."""
    doc = {"version": FORMAT_VERSION, "root": _node_to_obj(inv)}
    return json.dumps(doc, separators=(",", ": "))


def _require_int(obj: dict, key: str, path: str) -> int:
    v = obj.get(key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(0, 0, f"{path}.{key}: expected an integer, got {v!r}")
    return v


def _require_str(obj: dict, key: str, path: str) -> str:
    v = obj.get(key)
    if not isinstance(v, str):
        raise ParseError(0, 0, f"{path}.{key}: expected a string, got {v!r}")
    return v


def _check_keys(obj: dict, op: str, fields: Iterable[str], path: str) -> None:
    expected = {"op", *fields}
    extra = set(obj) - expected
    missing = expected - set(obj)
    if extra:
        raise ParseError(0, 0, f"{path}: unexpected keys {sorted(extra)} on {op}")
    if missing:
        raise ParseError(0, 0, f"{path}: missing keys {sorted(missing)} on {op}")


def _obj_to_node(obj: object, path: str) -> Invariant:
    if not isinstance(obj, dict):
        raise ParseError(0, 0, f"{path}: expected an object, got {type(obj).__name__}")
    op = obj.get("op")
    if not isinstance(op, str):
        raise ParseError(0, 0, f"{path}: missing op")
    if op == "AND" or op == "OR":
        _check_keys(obj, op, ("left", "right"), path)
        cls = And if op == "AND" else Or
        return cls(_obj_to_node(obj["left"], f"{path}.left"), _obj_to_node(obj["right"], f"{path}.right"))
    if op == "NOT":
        _check_keys(obj, op, ("inner",), path)
        return Not(_obj_to_node(obj["inner"], f"{path}.inner"))
    if op == "IMPLIES":
        _check_keys(obj, op, ("guard", "body"), path)
        return Implies(
            _obj_to_node(obj["guard"], f"{path}.guard"),
            _obj_to_node(obj["body"], f"{path}.body"),
        )
    if op == "BIGAND":
        _check_keys(obj, op, ("items",), path)
        items = obj["items"]
        if not isinstance(items, list):
            raise ParseError(0, 0, f"{path}.items: expected an array")
        return BigAnd(tuple(_obj_to_node(x, f"{path}.items[{i}]") for i, x in enumerate(items)))
    if op == "TRUE":
        _check_keys(obj, op, (), path)
        return TRUE
    if op == "FALSE":
        _check_keys(obj, op, (), path)
        return FALSE
    if op in _INT_FIELDS:
        fields = _INT_FIELDS[op]
        _check_keys(obj, op, fields, path)
        values = [_require_int(obj, k, path) for k in fields]
        cls = {
            "TimePoint": TimePoint,
            "TimeInterval": TimeInterval,
            "OccupyPoint": OccupyPoint,
            "OccupyBox": OccupyBox,
            "Occupy3DBox": Occupy3DBox,
        }[op]
        try:
            return cls(*values)
        except ValueError as exc:
            raise ParseError(0, 0, f"{path}: {exc}") from exc
    if op in _STR_FIELDS:
        fields = _STR_FIELDS[op]
        _check_keys(obj, op, fields, path)
        values = [_require_str(obj, k, path) for k in fields]
        cls = {"Owner": Owner, "Event": Event, "Edge": Edge, "Transition": Transition}[op]
        return cls(*values)
    if op == "Quantity":
        _check_keys(obj, op, ("kind", "value", "unit"), path)
        kind = _require_str(obj, "kind", path)
        unit = _require_str(obj, "unit", path)
        raw = obj["value"]
        if isinstance(raw, bool) or not isinstance(raw, (str, int, float)):
            raise ParseError(0, 0, f"{path}.value: expected a decimal string")
        try:
            value = Decimal(str(raw))
        except InvalidOperation as exc:
            raise ParseError(0, 0, f"{path}.value: not a decimal: {raw!r}") from exc
        return Quantity(kind, value, unit)
    raise UnknownOp(op)


def parse_json(text: str) -> Invariant:
    """Parse a canonical JSON document or a bare node tree."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.lineno, exc.colno, exc.msg) from exc
    if isinstance(obj, dict) and "version" in obj:
        version = obj["version"]
        if version != FORMAT_VERSION:
            raise VersionMismatch(str(version), FORMAT_VERSION)
        if set(obj) != {"version", "root"}:
            raise ParseError(0, 0, "document must hold exactly version and root")
        return _obj_to_node(obj["root"], "root")
    return _obj_to_node(obj, "root")


_XML_TAGS = {
    "and": "AND",
    "or": "OR",
    "not": "NOT",
    "implies": "IMPLIES",
    "bigand": "BIGAND",
    "true": "TRUE",
    "false": "FALSE",
    "timepoint": "TimePoint",
    "timeinterval": "TimeInterval",
    "owner": "Owner",
    "event": "Event",
    "occupypoint": "OccupyPoint",
    "occupybox": "OccupyBox",
    "occupy3dbox": "Occupy3DBox",
    "edge": "Edge",
    "transition": "Transition",
    "quantity": "Quantity",
}
_TAG_FOR_OP = {op: tag for tag, op in _XML_TAGS.items()}


def _attr_escape(value: str) -> str:
    return (
        value.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _obj_to_xml(obj: dict) -> str:
    op = obj["op"]
    tag = _TAG_FOR_OP[op]
    attrs = "".join(
        f' {k}="{_attr_escape(v if isinstance(v, str) else str(v))}"'
        for k, v in obj.items()
        if k != "op" and not isinstance(v, (dict, list))
    )
    children = [v for v in obj.values() if isinstance(v, dict)]
    if op == "BIGAND":
        children = list(obj["items"])
    if not children:
        return f"<{tag}{attrs}/>"
    inner = "".join(_obj_to_xml(c) for c in children)
    return f"<{tag}{attrs}>{inner}</{tag}>"


def serialize_xml(inv: Invariant) -> str:
    """The canonical XML document for a formula."""
    return (
        f'<invariant version="{FORMAT_VERSION}">{_obj_to_xml(_node_to_obj(inv))}</invariant>'
    )


def _elem_to_node(elem: ET.Element, path: str) -> Invariant:
    op = _XML_TAGS.get(elem.tag)
    if op is None:
        raise UnknownOp(elem.tag)
    children = list(elem)
    if op in ("AND", "OR"):
        if len(children) != 2:
            raise ParseError(0, 0, f"{path}: {op} needs exactly two children")
        cls = And if op == "AND" else Or
        return cls(
            _elem_to_node(children[0], f"{path}.left"),
            _elem_to_node(children[1], f"{path}.right"),
        )
    if op == "NOT":
        if len(children) != 1:
            raise ParseError(0, 0, f"{path}: NOT needs exactly one child")
        return Not(_elem_to_node(children[0], f"{path}.inner"))
    if op == "IMPLIES":
        if len(children) != 2:
            raise ParseError(0, 0, f"{path}: IMPLIES needs exactly two children")
        return Implies(
            _elem_to_node(children[0], f"{path}.guard"),
            _elem_to_node(children[1], f"{path}.body"),
        )
    if op == "BIGAND":
        return BigAnd(
            tuple(_elem_to_node(c, f"{path}.items[{i}]") for i, c in enumerate(children))
        )
    if children:
        raise ParseError(0, 0, f"{path}: {op} takes no children")
    obj: dict = {"op": op}
    for key, value in elem.attrib.items():
        if op in _INT_FIELDS:
            try:
                obj[key] = int(value)
            except ValueError as exc:
                raise ParseError(0, 0, f"{path}.{key}: not an integer: {value!r}") from exc
        else:
            obj[key] = value
    return _obj_to_node(obj, path)


def parse_xml(text: str) -> Invariant:
    """Parse a canonical XML document."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, column = exc.position if exc.position else (0, 0)
        raise ParseError(line, column, str(exc)) from exc
    if root.tag != "invariant":
        raise ParseError(0, 0, f"root element must be invariant, got {root.tag!r}")
    version = root.attrib.get("version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(str(version), FORMAT_VERSION)
    children = list(root)
    if len(children) != 1:
        raise ParseError(0, 0, "document must hold exactly one root node")
    return _elem_to_node(children[0], "root")


def model_to_ndjson_lines(inv: Invariant) -> Iterator[str]:
    """The model's clauses, one bare canonical JSON node per line."""
    for clause in to_clauses(inv):
        yield serialize_json_node(clause.to_invariant())


def ndjson_to_model(lines: Iterable[str]) -> Invariant:
    """Rebuild the conjunction of clause lines (blank lines are skipped)."""
    parts: list[Invariant] = []
    for i, line in enumerate(lines):
        line = line.strip()
        if not line:
            continue
        try:
            parts.append(parse_json(line))
        except ParseError as exc:
            raise ParseError(i + 1, exc.column, exc.reason) from exc
    return normalize(BigAnd(tuple(parts)))


def load_model_text(text: str, filename: str) -> Invariant:
    """Parse model text by file extension (.json, .xml or .ndjson)."""
    name = filename.lower()
    if name.endswith(".xml"):
        return parse_xml(text)
    if name.endswith(".ndjson"):
        return ndjson_to_model(text.splitlines())
    return parse_json(text)


__all__ = [
    "FORMAT_VERSION",
    "JSON_EXTENSION",
    "NDJSON_EXTENSION",
    "XML_EXTENSION",
    "load_model_text",
    "model_to_ndjson_lines",
    "ndjson_to_model",
    "parse_json",
    "parse_xml",
    "serialize_json",
    "serialize_json_node",
    "serialize_xml",
]
