"""Open graphs, g-flow checking and measurement patterns.

Angles are octants: an integer k in 0..7 standing for k*pi/4. Nothing in
this module touches floating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

NodeId = int
Edge = tuple[int, int]

OCTANTS = 8


def octant(k: int) -> int:
    """Normalise an integer to an octant in 0..7."""
    return k % OCTANTS


def octant_neg(k: int) -> int:
    return (-k) % OCTANTS


def norm_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


class PatternError(ValueError):
    """Raised when a graph or pattern violates a type invariant."""


@dataclass(frozen=True)
class OpenGraph:
    nodes: frozenset[int]
    edges: frozenset[Edge]
    inputs: tuple[int, ...] = ()
    outputs: tuple[int, ...] = ()

    def __post_init__(self):
        nodes = frozenset(self.nodes)
        edges = set()
        for e in self.edges:
            u, v = e
            if u == v:
                raise PatternError(f"self-loop on node {u}")
            if u not in nodes or v not in nodes:
                raise PatternError(f"edge {e} references an unknown node")
            ne = norm_edge(u, v)
            if ne in edges:
                raise PatternError(f"duplicate edge {ne}")
            edges.add(ne)
        for name, lst in (("inputs", self.inputs), ("outputs", self.outputs)):
            if len(set(lst)) != len(lst):
                raise PatternError(f"duplicate entry in {name}")
            bad = [x for x in lst if x not in nodes]
            if bad:
                raise PatternError(f"{name} contain unknown nodes {bad}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", frozenset(edges))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        adj: dict[int, set[int]] = {v: set() for v in nodes}
        for u, v in edges:
            adj[u].add(v)
            adj[v].add(u)
        object.__setattr__(self, "_adj", {v: frozenset(n) for v, n in adj.items()})

    def neighbours(self, v: int) -> frozenset[int]:
        try:
            return self._adj[v]
        except KeyError:
            raise PatternError(f"unknown node {v}") from None

    @property
    def measured(self) -> frozenset[int]:
        return self.nodes - frozenset(self.outputs)


def odd_neighbourhood(graph: OpenGraph, K: Iterable[int]) -> frozenset[int]:
    """Nodes with an odd number of neighbours in K."""
    out: set[int] = set()
    for k in K:
        out ^= graph.neighbours(k)
    return frozenset(out)


def transitive_closure(pairs: Iterable[tuple[int, int]]) -> frozenset[tuple[int, int]]:
    succ: dict[int, set[int]] = {}
    for a, b in pairs:
        succ.setdefault(a, set()).add(b)
        succ.setdefault(b, set())
    closure = set()
    for start in succ:
        stack = list(succ[start])
        seen: set[int] = set()
        while stack:
            x = stack.pop()
            if x in seen:
                continue
            seen.add(x)
            stack.extend(succ[x])
        closure.update((start, x) for x in seen)
    return frozenset(closure)


@dataclass(frozen=True)
class GFlow:
    """Flow map g and the covering pairs of a strict partial order."""

    g: Mapping[int, frozenset[int]]
    order: frozenset[tuple[int, int]]

    def __post_init__(self):
        object.__setattr__(self, "g", {k: frozenset(v) for k, v in self.g.items()})
        object.__setattr__(self, "order", frozenset(tuple(p) for p in self.order))

    def closure(self) -> frozenset[tuple[int, int]]:
        cached = self.__dict__.get("_closure")
        if cached is None:
            cached = transitive_closure(self.order)
            object.__setattr__(self, "_closure", cached)
        return cached

    def precedes(self, a: int, b: int) -> bool:
        return (a, b) in self.closure()


@dataclass(frozen=True)
class MeasurementPattern:
    graph: OpenGraph
    gflow: GFlow
    angles: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        angles = {k: int(v) for k, v in self.angles.items()}
        measured = self.graph.measured
        missing = sorted(measured - angles.keys())
        if missing:
            raise PatternError(f"non-output nodes without an angle: {missing}")
        extra = sorted(angles.keys() - measured)
        if extra:
            raise PatternError(f"angles given for output or unknown nodes: {extra}")
        bad = {k: v for k, v in angles.items() if not 0 <= v < OCTANTS}
        if bad:
            raise PatternError(f"angles outside 0..7: {bad}")
        object.__setattr__(self, "angles", angles)

    @property
    def nodes(self) -> frozenset[int]:
        return self.graph.nodes

    def measurement_order(self) -> list[int]:
        """Measured nodes in a deterministic linear extension of the order."""
        from .merge import linear_extension

        closure = {p for p in self.gflow.closure() if p[0] in self.graph.measured and p[1] in self.graph.measured}
        return linear_extension(closure, self.graph.measured)


@dataclass
class GFlowReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "gflow: ok"
        return "gflow: INVALID\n" + "\n".join(f"  - {v}" for v in self.violations)


def verify_gflow(pattern: MeasurementPattern) -> GFlowReport:
    """Check the three g-flow conditions and that the order is strict."""
    graph = pattern.graph
    g = pattern.gflow.g
    viol: list[str] = []
    outputs = set(graph.outputs)
    inputs = set(graph.inputs)
    for a, b in pattern.gflow.order:
        if a not in graph.nodes or b not in graph.nodes:
            viol.append(f"order pair ({a},{b}) references an unknown node")
    closure = pattern.gflow.closure()
    for a, b in sorted(closure):
        if a == b:
            viol.append(f"order is not irreflexive: cycle through {a}")
    for i in sorted(graph.measured):
        if not g.get(i):
            viol.append(f"g({i}) missing or empty")
    for i in sorted(g):
        gi = g[i]
        if i in outputs or i not in graph.nodes:
            viol.append(f"g defined on {i}, which is not a non-output node")
            continue
        if gi & inputs:
            viol.append(f"g({i}) contains input nodes {sorted(gi & inputs)}")
        if not gi <= graph.nodes:
            viol.append(f"g({i}) contains unknown nodes {sorted(gi - graph.nodes)}")
            continue
        odd = odd_neighbourhood(graph, gi)
        if i not in odd:
            viol.append(f"{i} not in Odd(g({i}))")
        for j in sorted(gi - {i}):
            if (i, j) not in closure:
                viol.append(f"condition 1: {j} in g({i}) but not {i} < {j}")
        for j in sorted(odd - {i}):
            if (i, j) not in closure:
                viol.append(f"condition 2: {j} in Odd(g({i})) but not {i} < {j}")
    return GFlowReport(viol)


def correction_sets(pattern: MeasurementPattern, i: int) -> tuple[frozenset[int], frozenset[int]]:
    """Nodes whose outcomes X- and Z-correct node i."""
    if i not in pattern.graph.nodes:
        raise PatternError(f"unknown node {i}")
    xs, zs = _correction_index(pattern)
    return xs.get(i, frozenset()), zs.get(i, frozenset())


def _correction_index(pattern: MeasurementPattern):
    cached = pattern.__dict__.get("_corr")
    if cached is not None:
        return cached
    xs: dict[int, set[int]] = {}
    zs: dict[int, set[int]] = {}
    for j, gj in pattern.gflow.g.items():
        for w in gj:
            if w != j:
                xs.setdefault(w, set()).add(j)
        for w in odd_neighbourhood(pattern.graph, gj):
            if w != j:
                zs.setdefault(w, set()).add(j)
    cached = ({k: frozenset(v) for k, v in xs.items()}, {k: frozenset(v) for k, v in zs.items()})
    object.__setattr__(pattern, "_corr", cached)
    return cached


def correction_parities(pattern: MeasurementPattern, w: int, outcomes: Mapping[int, int]) -> tuple[int, int]:
    """(s_X, s_Z) for node w given outcomes of its correction sources."""
    xset, zset = correction_sets(pattern, w)
    missing = sorted((xset | zset) - outcomes.keys())
    if missing:
        raise PatternError(f"missing outcomes for {missing} needed to correct node {w}")
    sx = 0
    for j in xset:
        sx ^= outcomes[j] & 1
    sz = 0
    for j in zset:
        sz ^= outcomes[j] & 1
    return sx, sz


def corrected_angle(pattern: MeasurementPattern, w: int, outcomes: Mapping[int, int]) -> int:
    """Adapted angle (-1)^sX * phi_w + sZ * pi, as an octant."""
    if w not in pattern.angles:
        raise PatternError(f"node {w} has no measurement angle")
    sx, sz = correction_parities(pattern, w, outcomes)
    k = pattern.angles[w]
    return ((-k if sx else k) + 4 * sz) % OCTANTS


def flow_order(graph: OpenGraph, g: Mapping[int, Iterable[int]]) -> frozenset[tuple[int, int]]:
    """The pairs forced by g-flow conditions 1 and 2."""
    pairs = set()
    for i, gi in g.items():
        gi = frozenset(gi)
        for j in gi - {i}:
            pairs.add((i, j))
        for j in odd_neighbourhood(graph, gi) - {i}:
            pairs.add((i, j))
    return frozenset(pairs)


def make_pattern(
    nodes: Iterable[int],
    edges: Iterable[tuple[int, int]],
    inputs: Iterable[int],
    outputs: Iterable[int],
    g: Mapping[int, Iterable[int]],
    angles: Mapping[int, int],
    order: Iterable[tuple[int, int]] | None = None,
) -> MeasurementPattern:
    """Convenience constructor; the order defaults to the one g forces."""
    graph = OpenGraph(frozenset(nodes), frozenset(norm_edge(*e) for e in edges), tuple(inputs), tuple(outputs))
    g = {k: frozenset(v) for k, v in g.items()}
    if order is None:
        order = flow_order(graph, g)
    return MeasurementPattern(graph, GFlow(g, frozenset(order)), dict(angles))
