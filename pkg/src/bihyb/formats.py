"""Instance (de)serialization.

JSON documents::

    {"kind": "dag", "capacity": 6000, "nodes": [{"dur": 16.3, "res": 4}, ...], "edges": [[0, 1], ...]}
    {"kind": "ged", "g1": {"labels": [...], "edges": [...]}, "g2": {...}}
    {"kind": "hcp", "n": 5, "edges": [[0, 1], ...]}

plus the TSPLIB/FHCP plain edge-list format (1-indexed ``u v`` pairs after an
``EDGE_DATA_SECTION`` header).
"""

from __future__ import annotations

import json
from decimal import Decimal
from fractions import Fraction
from typing import Any

from .errors import ContractError, ParseError, ValidationError
from .graph import DagInstance, HcpInstance, LabeledGraph, WeightedDigraph, instance_kind


def exact_number(x: Any, path: str = "$") -> Fraction:
    """Convert a JSON scalar (int, Decimal, or "p/q" / decimal string) to a Fraction."""
    if isinstance(x, bool):
        raise ParseError(path, "expected a number, got a boolean")
    if isinstance(x, (int, Decimal, Fraction)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(Decimal(repr(x)))
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError):
            pass
    raise ParseError(path, f"expected a number, got {x!r}")


def format_number(x: int | Fraction) -> int | str:
    """Exact JSON-friendly form: an int, else a decimal string, else ``"p/q"``."""
    x = Fraction(x)
    if x.denominator == 1:
        return x.numerator
    d = x.denominator
    k = 0
    while d % 10 == 0:
        d //= 10
        k += 1
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{x.numerator}/{x.denominator}"
    digits = k + max(twos, fives)
    scaled = x * 10**digits
    return str(Decimal(scaled.numerator).scaleb(-digits))


class _RawNumber(float):
    # json.dumps writes floats via float.__repr__, so this lets exact decimals through verbatim
    def __new__(cls, text):
        obj = super().__new__(cls, float(text))
        obj._text = text
        return obj

    def __repr__(self):
        return self._text


def _json_number(x):
    v = format_number(x)
    if isinstance(v, str) and "/" not in v:
        return _RawNumber(v)
    return v


def _expect(cond, path, msg):
    if not cond:
        raise ParseError(path, msg)


def _int(x, path):
    _expect(isinstance(x, int) and not isinstance(x, bool), path, f"expected an integer, got {x!r}")
    return x


def _edge_list(raw, path):
    _expect(isinstance(raw, list), path, "expected a list of edges")
    out = []
    for i, e in enumerate(raw):
        _expect(isinstance(e, list) and len(e) == 2, f"{path}[{i}]", "edge must be [u, v]")
        out.append((_int(e[0], f"{path}[{i}][0]"), _int(e[1], f"{path}[{i}][1]")))
    return out


def _parse_labeled(doc, path):
    _expect(isinstance(doc, dict), path, "expected an object")
    _expect("labels" in doc, path, "missing 'labels'")
    labels = doc["labels"]
    _expect(isinstance(labels, list), f"{path}.labels", "expected a list")
    for i, lab in enumerate(labels):
        _expect(isinstance(lab, (str, int)) and not isinstance(lab, bool), f"{path}.labels[{i}]",
                "label must be a string or integer")
    edges = _edge_list(doc.get("edges", []), f"{path}.edges")
    try:
        return LabeledGraph(labels, edges)
    except ContractError as err:
        raise ValidationError(f"{path}: {err}") from err


def _parse_dag(doc):
    _expect("capacity" in doc, "$", "missing 'capacity'")
    cap = _int(doc["capacity"], "$.capacity")
    nodes = doc.get("nodes")
    _expect(isinstance(nodes, list), "$.nodes", "expected a list")
    dur, res, job, names = [], [], [], []
    for i, node in enumerate(nodes):
        p = f"$.nodes[{i}]"
        _expect(isinstance(node, dict), p, "expected an object")
        _expect("dur" in node and "res" in node, p, "node needs 'dur' and 'res'")
        dur.append(exact_number(node["dur"], f"{p}.dur"))
        res.append(_int(node["res"], f"{p}.res"))
        job.append(_int(node["job"], f"{p}.job") if "job" in node else None)
        names.append(node.get("name"))
    edges = _edge_list(doc.get("edges", []), "$.edges")
    try:
        graph = WeightedDigraph(len(nodes), edges)
    except ContractError as err:
        raise ValidationError(str(err)) from err
    return DagInstance(
        graph,
        tuple(dur),
        tuple(res),
        cap,
        job=tuple(job) if all(j is not None for j in job) and job else None,
        names=tuple(str(n) for n in names) if all(n is not None for n in names) and names else None,
    )


def _parse_hcp(doc):
    _expect("n" in doc, "$", "missing 'n'")
    n = _int(doc["n"], "$.n")
    edges = _edge_list(doc.get("edges", []), "$.edges")
    return HcpInstance(n, frozenset(edges))


def parse_instance(data: bytes | str, kind: str | None = None):
    """Parse an instance document.

    ``kind`` may be ``"dag"``, ``"ged"``, ``"hcp"`` or ``"fhcp"``; when omitted
    it is read from the JSON ``kind`` field, or FHCP is assumed for non-JSON
    text.

    Returns:
        ``DagInstance``, ``(LabeledGraph, LabeledGraph)`` or ``HcpInstance``.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    if kind == "fhcp" or (kind is None and not data.lstrip().startswith("{")):
        return parse_fhcp(data)
    try:
        doc = json.loads(data, parse_float=Decimal)
    except json.JSONDecodeError as err:
        raise ParseError("$", f"invalid JSON: {err}") from err
    return parse_document(doc, kind)


def parse_document(doc, kind: str | None = None):
    """Build an instance from an already-decoded JSON object (floats as ``Decimal``)."""
    _expect(isinstance(doc, dict), "$", "expected an object")
    doc_kind = doc.get("kind")
    if kind is not None and doc_kind is not None and doc_kind != kind:
        raise ParseError("$.kind", f"expected {kind!r}, got {doc_kind!r}")
    kind = kind or doc_kind
    if kind == "dag":
        return _parse_dag(doc)
    if kind == "ged":
        _expect("g1" in doc and "g2" in doc, "$", "ged document needs 'g1' and 'g2'")
        return _parse_labeled(doc["g1"], "$.g1"), _parse_labeled(doc["g2"], "$.g2")
    if kind == "hcp":
        return _parse_hcp(doc)
    raise ParseError("$.kind", f"unknown instance kind {kind!r}")


def to_document(inst) -> dict:
    kind = instance_kind(inst)
    if kind == "dag":
        nodes = []
        for i in range(inst.node_count):
            node = {"dur": _json_number(inst.duration[i]), "res": inst.resource[i]}
            if inst.job is not None:
                node["job"] = inst.job[i]
            if inst.names is not None:
                node["name"] = inst.names[i]
            nodes.append(node)
        return {"kind": "dag", "capacity": inst.capacity, "nodes": nodes,
                "edges": [list(e) for e in sorted(inst.graph.edges)]}
    if kind == "ged":
        g1, g2 = inst
        return {"kind": "ged",
                "g1": {"labels": list(g1.labels), "edges": [list(e) for e in sorted(g1.edges)]},
                "g2": {"labels": list(g2.labels), "edges": [list(e) for e in sorted(g2.edges)]}}
    return {"kind": "hcp", "n": inst.n, "edges": [list(e) for e in sorted(inst.edges)]}


def serialize_instance(inst) -> str:
    return json.dumps(to_document(inst), separators=(",", ":")) + "\n"


def parse_fhcp(text: str) -> HcpInstance:
    """Parse a TSPLIB-style HCP edge list (1-indexed)."""
    n = None
    edges = []
    in_section = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if not in_section:
            if line.upper().startswith("EDGE_DATA_SECTION"):
                in_section = True
                continue
            if ":" in line:
                key, _, value = line.partition(":")
                if key.strip().upper() == "DIMENSION":
                    try:
                        n = int(value.strip())
                    except ValueError as err:
                        raise ParseError(f"line {lineno}", "DIMENSION must be an integer") from err
                continue
            if line.upper() == "EOF":
                break
            # headerless files: the first numeric line starts the edge list
            if line[0].isdigit():
                in_section = True
            else:
                continue
        if line.upper() == "EOF" or line == "-1":
            break
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"line {lineno}", f"expected 'u v', got {line!r}")
        try:
            u, v = int(parts[0]) - 1, int(parts[1]) - 1
        except ValueError as err:
            raise ParseError(f"line {lineno}", f"expected integers, got {line!r}") from err
        if u < 0 or v < 0:
            raise ParseError(f"line {lineno}", "node ids are 1-indexed")
        edges.append((u, v))
    if n is None:
        n = 1 + max((max(e) for e in edges), default=-1)
    return HcpInstance(n, frozenset(edges))


def serialize_fhcp(inst: HcpInstance, name: str = "instance") -> str:
    lines = [f"NAME : {name}", "TYPE : HCP", f"DIMENSION : {inst.n}",
             "EDGE_DATA_FORMAT : EDGE_LIST", "EDGE_DATA_SECTION"]
    lines += [f"{u + 1} {v + 1}" for u, v in sorted(inst.edges)]
    lines += ["-1", "EOF"]
    return "\n".join(lines) + "\n"


def load_instance(path, kind: str | None = None):
    with open(path, "rb") as fh:
        return parse_instance(fh.read(), kind)
