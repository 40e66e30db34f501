"""Text formats for patterns, mergers and protocol instances.

All three are JSON objects. Containers remember the line they start on so
invariant violations can be reported against the file, not just the data.
"""

from __future__ import annotations

import json
import json.decoder
import json.scanner
import re
from types import SimpleNamespace
from typing import Any

from .merge import MergerGraph
from .pattern import GFlow, MeasurementPattern, OpenGraph, PatternError
from .statevec import StateVector


class FormatError(ValueError):
    def __init__(self, msg: str, line: int | None = None, path: str | None = None):
        where = f"{path or '<input>'}:{line}: " if line else (f"{path}: " if path else "")
        super().__init__(where + msg)
        self.line = line


class _LinedDict(dict):
    line = 1
    key_lines: dict


class _LinedList(list):
    line = 1


class _Decoder(json.JSONDecoder):
    """JSON decoder that records the start line of every object and array."""

    def __init__(self, text: str):
        super().__init__()
        self._text = text
        self.parse_object = self._object
        self.parse_array = self._array
        self.scan_once = json.scanner.py_make_scanner(self)

    def _line(self, idx: int) -> int:
        return self._text.count("\n", 0, idx) + 1

    def _object(self, s_and_end, *args, **kw):
        s, start = s_and_end
        obj, end = json.decoder.JSONObject(s_and_end, *args, **kw)
        d = _LinedDict(obj)
        d.line = self._line(start - 1)
        d.key_lines = {}
        span = s[start:end]
        for k in d:
            mt = re.search(r'"' + re.escape(str(k)) + r'"\s*:', span)
            d.key_lines[k] = self._line(start + mt.start()) if mt else d.line
        return d, end

    def _array(self, s_and_end, *args, **kw):
        s, start = s_and_end
        arr, end = json.decoder.JSONArray(s_and_end, *args, **kw)
        lst = _LinedList(arr)
        lst.line = self._line(start - 1)
        return lst, end


def load_text(text: str, path: str | None = None) -> _LinedDict:
    try:
        data = _Decoder(text).decode(text)
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, exc.lineno, path) from None
    if not isinstance(data, dict):
        raise FormatError("top level must be an object", 1, path)
    return data


def _line(obj: Any, key=None) -> int | None:
    if key is not None and isinstance(obj, _LinedDict):
        return obj.key_lines.get(key, obj.line)
    return getattr(obj, "line", None)


class _Reader:
    def __init__(self, doc: dict, path: str | None):
        self.doc = doc
        self.path = path

    def fail(self, msg: str, obj=None, key=None):
        raise FormatError(msg, _line(obj if obj is not None else self.doc, key), self.path)

    def get(self, key: str, default=None, required=True):
        if key not in self.doc:
            if required:
                self.fail(f"missing key {key!r}")
            return default
        return self.doc[key]

    def int_list(self, key: str, required=True) -> list[int]:
        val = self.get(key, [], required)
        if not isinstance(val, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in val):
            self.fail(f"{key} must be a list of integers", self.doc, key)
        bad = [x for x in val if x < 0]
        if bad:
            self.fail(f"{key}: node ids must be non-negative, got {bad}", self.doc, key)
        return list(val)

    def pairs(self, key: str, required=True) -> list[tuple[int, int]]:
        val = self.get(key, [], required)
        if not isinstance(val, list):
            self.fail(f"{key} must be a list of pairs", self.doc, key)
        out = []
        for item in val:
            if not (isinstance(item, list) and len(item) == 2 and all(isinstance(x, int) for x in item)):
                self.fail(f"{key}: expected a pair of integers, got {item!r}", item if isinstance(item, list) else val, None if isinstance(item, list) else None)
            out.append((item[0], item[1]))
        return out

    def int_map(self, key: str, required=True) -> dict[int, Any]:
        val = self.get(key, {}, required)
        if not isinstance(val, dict):
            self.fail(f"{key} must be an object", self.doc, key)
        out = {}
        for k, v in val.items():
            try:
                out[int(k)] = v
            except ValueError:
                self.fail(f"{key}: key {k!r} is not a node id", val, k)
        return out


def _graph(r: _Reader) -> OpenGraph:
    nodes = r.int_list("nodes")
    if len(set(nodes)) != len(nodes):
        r.fail("nodes: duplicate node id", r.doc, "nodes")
    edges = r.pairs("edges")
    node_set = set(nodes)
    seen = set()
    raw_edges = r.doc.get("edges", [])
    for item, (u, v) in zip(raw_edges, edges):
        if u == v:
            r.fail(f"edges: self-loop on {u}", item)
        if u not in node_set or v not in node_set:
            r.fail(f"edges: ({u},{v}) uses an unknown node", item)
        key = (min(u, v), max(u, v))
        if key in seen:
            r.fail(f"edges: duplicate edge ({u},{v})", item)
        seen.add(key)
    inputs = r.int_list("inputs")
    outputs = r.int_list("outputs")
    for name, lst in (("inputs", inputs), ("outputs", outputs)):
        if len(set(lst)) != len(lst):
            r.fail(f"{name}: duplicate entry", r.doc, name)
        if not set(lst) <= node_set:
            r.fail(f"{name}: unknown nodes {sorted(set(lst) - node_set)}", r.doc, name)
    return OpenGraph(frozenset(nodes), frozenset(seen), tuple(inputs), tuple(outputs))


def pattern_from_doc(doc: dict, path: str | None = None) -> MeasurementPattern:
    r = _Reader(doc, path)
    graph = _graph(r)
    gf_raw = r.int_map("gflow")
    g = {}
    for k, v in gf_raw.items():
        if k not in graph.nodes:
            r.fail(f"gflow: unknown node {k}", doc["gflow"], str(k))
        if not isinstance(v, list) or not v or not all(isinstance(x, int) for x in v):
            r.fail(f"gflow: g({k}) must be a non-empty list of node ids", doc["gflow"], str(k))
        if not set(v) <= graph.nodes:
            r.fail(f"gflow: g({k}) uses unknown nodes {sorted(set(v) - graph.nodes)}", doc["gflow"], str(k))
        g[k] = frozenset(v)
    order = r.pairs("order")
    for item, (a, b) in zip(doc.get("order", []), order):
        if a not in graph.nodes or b not in graph.nodes:
            r.fail(f"order: ({a},{b}) uses an unknown node", item)
        if a == b:
            r.fail(f"order: ({a},{a}) is reflexive", item)
    ang_raw = r.int_map("angles")
    angles = {}
    for k, v in ang_raw.items():
        if not isinstance(v, int) or isinstance(v, bool) or not 0 <= v <= 7:
            r.fail(f"angles: node {k} has {v!r}, expected an octant 0..7", doc["angles"], str(k))
        if k not in graph.nodes or k in graph.outputs:
            r.fail(f"angles: node {k} is not a measured node", doc["angles"], str(k))
        angles[k] = v
    missing = sorted(graph.measured - angles.keys())
    if missing:
        r.fail(f"angles: missing for measured nodes {missing}", doc, "angles")
    try:
        return MeasurementPattern(graph, GFlow(g, frozenset(order)), angles)
    except PatternError as exc:
        r.fail(str(exc))


def merger_from_doc(doc: dict, path: str | None = None) -> MergerGraph:
    r = _Reader(doc, path)
    graph = _graph(r)
    embeds = []
    for key in ("embed0", "embed1"):
        raw = r.int_map(key)
        e = {}
        for k, v in raw.items():
            if not isinstance(v, int) or v not in graph.nodes:
                r.fail(f"{key}: {k} maps to {v!r}, not a merger node", doc[key], str(k))
            e[k] = v
        if len(set(e.values())) != len(e):
            r.fail(f"{key}: not injective", doc, key)
        embeds.append(e)
    roles_raw = r.int_map("roles")
    for k in roles_raw:
        if k not in graph.nodes:
            r.fail(f"roles: unknown node {k}", doc["roles"], str(k))
    order = r.int_list("total_order")
    if len(set(order)) != len(order):
        r.fail("total_order: node listed twice", doc, "total_order")
    return MergerGraph(graph, embeds[0], embeds[1], tuple(order), {k: str(v) for k, v in roles_raw.items()})


def _state_from_doc(val, r: _Reader, key: str) -> StateVector:
    if not isinstance(val, dict) or "labels" not in val or "amplitudes" not in val:
        r.fail(f"{key}: expected {{labels, amplitudes}}", r.doc, key)
    labels = val["labels"]
    amps = [complex(re_, im) for re_, im in val["amplitudes"]]
    try:
        return StateVector.from_vector(amps, labels)
    except Exception as exc:
        r.fail(f"{key}: {exc}", r.doc, key)


def instance_from_doc(doc: dict, path: str | None = None) -> dict:
    """Parse the pieces of an instance file (patterns, merger, inputs)."""
    r = _Reader(doc, path)
    out = {
        "name": r.get("name", "", required=False),
        "u0": pattern_from_doc(r.get("u0"), path),
        "u1": pattern_from_doc(r.get("u1"), path),
        "merger": merger_from_doc(r.get("merger"), path),
    }
    spec = r.int_map("input_spec", required=False)
    for k, v in spec.items():
        if v not in ("public", "private"):
            r.fail(f"input_spec: {k} must be public or private", doc["input_spec"], str(k))
    out["input_spec"] = spec
    states = []
    for key in ("input0", "input1"):
        val = r.get(key, None, required=False)
        states.append(_state_from_doc(val, r, key) if val is not None else None)
    out["inputs"] = tuple(states)
    return out


def read_doc(path: str) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read file: {exc.strerror}", None, path) from None
    return load_text(text, path)


def load_pattern(path: str) -> MeasurementPattern:
    return pattern_from_doc(read_doc(path), path)


def load_merger(path: str) -> MergerGraph:
    return merger_from_doc(read_doc(path), path)


def load_instance(path: str):
    from .protocol import build_instance

    parts = instance_from_doc(read_doc(path), path)
    return build_instance(
        parts["u0"], parts["u1"], parts["merger"], parts["input_spec"], parts["inputs"], name=parts["name"]
    )


# serialisation -------------------------------------------------------------


def _flat(obj) -> str:
    return json.dumps(obj, separators=(", ", ": "))


def _map(d: dict) -> dict:
    return {str(k): d[k] for k in sorted(d)}


class _Raw(str):
    """Already-rendered nested document."""


def _doc_lines(items: list[tuple[str, Any]], indent: str = "") -> str:
    body = []
    for k, v in items:
        rendered = v if isinstance(v, _Raw) else _flat(v)
        body.append(f'{indent}  "{k}": {rendered}')
    return "{\n" + ",\n".join(body) + "\n" + indent + "}"


def _graph_items(graph: OpenGraph) -> list[tuple[str, Any]]:
    return [
        ("nodes", sorted(graph.nodes)),
        ("edges", [list(e) for e in sorted(graph.edges)]),
        ("inputs", list(graph.inputs)),
        ("outputs", list(graph.outputs)),
    ]


def pattern_items(p: MeasurementPattern) -> list[tuple[str, Any]]:
    return _graph_items(p.graph) + [
        ("gflow", _map({k: sorted(v) for k, v in p.gflow.g.items()})),
        ("order", [list(x) for x in sorted(p.gflow.order)]),
        ("angles", _map(p.angles)),
    ]


def merger_items(m: MergerGraph) -> list[tuple[str, Any]]:
    return _graph_items(m.graph) + [
        ("embed0", _map(m.embed0)),
        ("embed1", _map(m.embed1)),
        ("roles", _map(m.roles)),
        ("total_order", list(m.total_order)),
    ]


def serialize_pattern(p: MeasurementPattern) -> str:
    return _doc_lines(pattern_items(p)) + "\n"


def serialize_merger(m: MergerGraph) -> str:
    return _doc_lines(merger_items(m)) + "\n"


def _state_doc(st: StateVector) -> dict:
    return {
        "labels": list(st.labels),
        "amplitudes": [[round(float(a.real), 12), round(float(a.imag), 12)] for a in st.vector()],
    }


def serialize_instance(inst) -> str:
    items: list[tuple[str, Any]] = [("name", inst.name)]
    items.append(("u0", _Raw(_doc_lines(pattern_items(inst.u0), "  "))))
    items.append(("u1", _Raw(_doc_lines(pattern_items(inst.u1), "  "))))
    items.append(("merger", _Raw(_doc_lines(merger_items(inst.merger), "  "))))
    items.append(("input_spec", _map(dict(inst.input_spec))))
    for b, key in ((0, "input0"), (1, "input1")):
        if inst.inputs[b] is not None:
            items.append((key, _state_doc(inst.inputs[b])))
    return _doc_lines(items) + "\n"


def canonical(text: str, kind: str) -> str:
    """Canonical form of a pattern, merger or instance document."""
    doc = load_text(text)
    if kind == "pattern":
        return serialize_pattern(pattern_from_doc(doc))
    if kind == "merger":
        return serialize_merger(merger_from_doc(doc))
    if kind == "instance":
        return serialize_instance(SimpleNamespace(**instance_from_doc(doc)))
    raise ValueError(f"unknown document kind {kind!r}")
