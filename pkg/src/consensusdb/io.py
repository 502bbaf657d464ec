"""Reading and writing trees, BID tables and group matrices.

Tree documents are JSON. Every node has ``"node"`` set to ``"and"``, ``"or"``
or ``"leaf"``; inner nodes list ``"children"``; a child of an OR node carries
its edge probability as ``"prob"``; leaves carry ``"key"`` and ``"value"``::

    {"node": "or", "children": [
        {"prob": 0.4, "node": "leaf", "key": "t1", "value": 7},
        {"prob": 0.6, "node": "leaf", "key": "t1", "value": 2}]}
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .aggregate import GroupMatrix
from .model import AndNode, AndXorTree, Leaf, OrNode, TupleAlternative, from_bid, validate


class DataError(ValueError):
    """Malformed or invalid input document."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None, column: int | None = None,
                 violations=None):
        where = []
        if line is not None:
            where.append(f"line {line}, column {column}")
        if path:
            where.append(f"at {path}")
        super().__init__(f"{message} ({'; '.join(where)})" if where else message)
        self.path = path
        self.line = line
        self.column = column
        self.violations = violations or []


def _node_from_json(obj: Any, path: str):
    if not isinstance(obj, dict):
        raise DataError("node must be a JSON object", path)
    kind = obj.get("node")
    if kind == "leaf":
        if "key" not in obj or "value" not in obj:
            raise DataError("leaf needs 'key' and 'value'", path)
        key, value = obj["key"], obj["value"]
        if not isinstance(key, str) or not key:
            raise DataError("leaf key must be a non-empty string", path)
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise DataError("leaf value must be a number or a string", path)
        return Leaf(TupleAlternative(key, value))
    if kind not in ("and", "or"):
        raise DataError(f"unknown node type {kind!r}", path)
    children = obj.get("children", [])
    if not isinstance(children, list):
        raise DataError("'children' must be a list", path)
    parsed = []
    for i, child in enumerate(children):
        sub = _node_from_json(child, f"{path}/{i}")
        if kind == "or":
            prob = child.get("prob")
            if isinstance(prob, bool) or not isinstance(prob, (int, float)):
                raise DataError("child of an OR node needs a numeric 'prob'", f"{path}/{i}")
            parsed.append((float(prob), sub))
        else:
            parsed.append(sub)
    return AndNode(tuple(parsed)) if kind == "and" else OrNode(tuple(parsed))


def parse_tree(text: str, check: bool = True) -> AndXorTree:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from None
    tree = AndXorTree(_node_from_json(doc, "root"))
    if check:
        report = validate(tree)
        if not report.valid:
            first = report.violations[0]
            raise DataError(f"{first.kind} constraint violated: {first.message}", first.path,
                            violations=report.violations)
    return tree


def _node_to_json(node, prob=None) -> dict:
    out: dict = {} if prob is None else {"prob": prob}
    if isinstance(node, Leaf):
        out.update(node="leaf", key=node.alt.key, value=node.alt.value)
    elif isinstance(node, AndNode):
        out.update(node="and", children=[_node_to_json(c) for c in node.children])
    else:
        out.update(node="or", children=[_node_to_json(c, p) for p, c in node.children])
    return out


def serialize_tree(tree: AndXorTree) -> str:
    return json.dumps(_node_to_json(tree.root), indent=2) + "\n"


def _parse_value(raw: str):
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def parse_bid_csv(text: str) -> AndXorTree:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        return from_bid([])
    if [h.strip() for h in header] != ["key", "value", "prob"]:
        raise DataError("BID CSV header must be 'key,value,prob'", line=1, column=1)
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise DataError(f"expected 3 fields, got {len(row)}", line=lineno, column=1)
        key, value, prob = (c.strip() for c in row)
        try:
            p = float(prob)
        except ValueError:
            raise DataError(f"probability {prob!r} is not a number", line=lineno, column=3) from None
        if not 0.0 <= p <= 1.0:
            raise DataError(f"probability {p} outside [0, 1]", line=lineno, column=3)
        rows.append((key, _parse_value(value), p))
    try:
        return from_bid(rows)
    except ValueError as exc:
        raise DataError(str(exc)) from None


def serialize_bid_csv(tree: AndXorTree) -> str:
    from .model import bid_blocks

    blocks = bid_blocks(tree)
    if blocks is None:
        raise ValueError("tree is not BID-shaped")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value", "prob"])
    for block in blocks:
        for alt, p in block:
            w.writerow([alt.key, alt.value, repr(p)])
    return buf.getvalue()


def parse_group_csv(text: str) -> GroupMatrix:
    """Header of group names (optionally led by a ``key`` column), one row per tuple."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise DataError("group CSV is empty")
    header = [h.strip() for h in header]
    has_key = header[0] == "key"
    groups = header[1:] if has_key else header
    rows, names = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"expected {len(header)} fields, got {len(row)}", line=lineno, column=1)
        if has_key:
            names.append(row[0].strip())
            row = row[1:]
        try:
            rows.append([float(c) for c in row])
        except ValueError:
            raise DataError("non-numeric probability", line=lineno, column=1) from None
    try:
        return GroupMatrix(np.array(rows, dtype=float).reshape(len(rows), len(groups)), groups, names)
    except ValueError as exc:
        raise DataError(str(exc)) from None


def serialize_group_csv(gm: GroupMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", *gm.groups])
    for name, row in zip(gm.tuples, gm.P):
        w.writerow([name, *(repr(float(x)) for x in row)])
    return buf.getvalue()


@dataclass
class Dataset:
    format: str  # "tree" | "bid" | "groups"
    tree: AndXorTree | None = None
    groups: GroupMatrix | None = None
    path: str | None = None
    checksum: str | None = None


def parse_dataset(text: str, path: str | None = None, check: bool = True) -> Dataset:
    checksum = hashlib.sha256(text.encode("utf-8")).hexdigest()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return Dataset("tree", tree=parse_tree(text, check), path=path, checksum=checksum)
    first = stripped.splitlines()[0] if stripped else ""
    if [h.strip() for h in first.split(",")] == ["key", "value", "prob"] or not stripped:
        return Dataset("bid", tree=parse_bid_csv(text), path=path, checksum=checksum)
    return Dataset("groups", groups=parse_group_csv(text), path=path, checksum=checksum)


def load_dataset(path: str | Path, check: bool = True) -> Dataset:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    return parse_dataset(text, str(path), check)
