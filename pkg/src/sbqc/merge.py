"""Merger graphs: two embedded computations sharing one resource graph."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .pattern import GFlow, MeasurementPattern, OpenGraph, norm_edge, transitive_closure

OrderRelation = frozenset  # of (a, b) pairs meaning a < b

SHARED = "shared"
ONLY = ("only0", "only1")
MIDDLE = ("middle0", "middle1")
TELEPORT = ("teleport0", "teleport1")
TERMINAL = ("terminal0", "terminal1")
ROLES = {SHARED, *ONLY, *MIDDLE, *TELEPORT, *TERMINAL}


class CycleError(ValueError):
    def __init__(self, cycle: list[int]):
        super().__init__(f"order union has a cycle: {' < '.join(map(str, cycle + cycle[:1]))}")
        self.cycle = cycle


def role_owner(role: str) -> int | None:
    """Owner bit for gadget roles, None otherwise."""
    if role[-1] in "01" and role != SHARED:
        return int(role[-1])
    return None


@dataclass(frozen=True)
class MergerGraph:
    graph: OpenGraph
    embed0: Mapping[int, int]
    embed1: Mapping[int, int]
    total_order: tuple[int, ...]
    roles: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "embed0", dict(self.embed0))
        object.__setattr__(self, "embed1", dict(self.embed1))
        object.__setattr__(self, "total_order", tuple(self.total_order))
        object.__setattr__(self, "roles", dict(self.roles))

    def embed(self, b: int) -> dict[int, int]:
        return self.embed1 if b else self.embed0

    def nodes_with_role(self, *roles: str) -> list[int]:
        return sorted(v for v, r in self.roles.items() if r in roles)

    def middles(self) -> list[int]:
        return self.nodes_with_role(*MIDDLE)

    def teleport_parts(self, t: int) -> tuple[int, int]:
        """(v, v2) for a teleport middle t."""
        term = [u for u in self.graph.neighbours(t) if self.roles.get(u, "").startswith("terminal")]
        other = [u for u in self.graph.neighbours(t) if u not in term]
        if len(term) != 1 or len(other) != 1:
            raise ValueError(f"teleport middle {t} is not wired as v - v1 - v2")
        return other[0], term[0]


def _cycle_in(pairs: Iterable[tuple[int, int]]) -> list[int] | None:
    succ: dict[int, list[int]] = {}
    for a, b in pairs:
        succ.setdefault(a, []).append(b)
        succ.setdefault(b, [])
    for v in succ:
        succ[v].sort()
    colour: dict[int, int] = {}
    stack_path: list[int] = []

    def visit(v: int) -> list[int] | None:
        colour[v] = 1
        stack_path.append(v)
        for w in succ[v]:
            if colour.get(w) == 1:
                return stack_path[stack_path.index(w) :]
            if w not in colour:
                found = visit(w)
                if found:
                    return found
        stack_path.pop()
        colour[v] = 2
        return None

    for v in sorted(succ):
        if v not in colour:
            found = visit(v)
            if found:
                return list(found)
    return None


def union_order_closure(
    o0: Iterable[tuple[int, int]],
    o1: Iterable[tuple[int, int]],
    e0: Mapping[int, int],
    e1: Mapping[int, int],
) -> frozenset[tuple[int, int]]:
    """Transitive closure of the renamed union of two orders."""
    for name, e in (("embedding 0", e0), ("embedding 1", e1)):
        if len(set(e.values())) != len(e):
            raise ValueError(f"{name} is not injective")
    pairs = {(e0[a], e0[b]) for a, b in o0} | {(e1[a], e1[b]) for a, b in o1}
    cyc = _cycle_in(pairs)
    if cyc is not None:
        raise CycleError(cyc)
    return transitive_closure(pairs)


def linear_extension(closure: Iterable[tuple[int, int]], nodes: Iterable[int]) -> list[int]:
    """Topological sort, smallest available NodeId first."""
    nodes = set(nodes)
    indeg = {v: 0 for v in nodes}
    succ: dict[int, set[int]] = {v: set() for v in nodes}
    for a, b in set(closure):
        if a not in nodes or b not in nodes:
            continue
        if a == b:
            raise CycleError([a])
        if b not in succ[a]:
            succ[a].add(b)
            indeg[b] += 1
    heap = [v for v, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        v = heapq.heappop(heap)
        out.append(v)
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(heap, w)
    if len(out) != len(nodes):
        raise CycleError(_cycle_in((a, b) for a in succ for b in succ[a]) or [])
    return out


def trivial_merger(u0: MeasurementPattern, u1: MeasurementPattern) -> MergerGraph:
    """Disjoint union; all of U0's measurements, then all of U1's."""
    embeds = []
    roles: dict[int, str] = {}
    nxt = 0
    for b, u in enumerate((u0, u1)):
        e = {}
        for v in sorted(u.nodes):
            e[v] = nxt
            roles[nxt] = ONLY[b]
            nxt += 1
        embeds.append(e)
    e0, e1 = embeds
    edges = {norm_edge(e0[a], e0[b]) for a, b in u0.graph.edges}
    edges |= {norm_edge(e1[a], e1[b]) for a, b in u1.graph.edges}
    graph = OpenGraph(
        frozenset(range(nxt)),
        frozenset(edges),
        tuple(e0[v] for v in u0.graph.inputs) + tuple(e1[v] for v in u1.graph.inputs),
        tuple(e0[v] for v in u0.graph.outputs) + tuple(e1[v] for v in u1.graph.outputs),
    )
    order = [e0[v] for v in u0.measurement_order()] + [e1[v] for v in u1.measurement_order()]
    return MergerGraph(graph, e0, e1, tuple(order), roles)


@dataclass
class MergerReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "merger: ok"
        return "merger: INVALID\n" + "\n".join(f"  - {v}" for v in self.violations)


def _bridged(m: MergerGraph, a: int, b: int, owner: int) -> bool:
    for w in m.nodes_with_role(MIDDLE[owner]):
        if m.graph.neighbours(w) == frozenset((a, b)):
            return True
    return False


def verify_merger(m: MergerGraph, u0: MeasurementPattern, u1: MeasurementPattern) -> MergerReport:
    """Embeddings preserve edges and the total order extends both orders."""
    viol: list[str] = []
    gm = m.graph
    for v in sorted(gm.nodes):
        r = m.roles.get(v)
        if r is None:
            viol.append(f"node {v} has no role")
        elif r not in ROLES:
            viol.append(f"node {v} has unknown role {r!r}")
    for b, u in enumerate((u0, u1)):
        e = m.embed(b)
        if set(e) != set(u.nodes):
            viol.append(f"embedding {b} domain differs from the nodes of U{b}")
            continue
        if len(set(e.values())) != len(e):
            viol.append(f"embedding {b} is not injective")
        if not set(e.values()) <= gm.nodes:
            viol.append(f"embedding {b} maps outside the merger graph")
            continue
        for x, y in sorted(u.graph.edges):
            a, c = e[x], e[y]
            if norm_edge(a, c) not in gm.edges and not _bridged(m, a, c, b):
                viol.append(f"embedding {b} drops edge ({x},{y})")
    if viol:
        return MergerReport(viol)
    img = [set(m.embed0.values()), set(m.embed1.values())]
    for v in sorted(gm.nodes):
        r = m.roles[v]
        want = None
        if v in img[0] and v in img[1]:
            want = {SHARED}
        elif v in img[0]:
            want = {"only0"}
        elif v in img[1]:
            want = {"only1"}
        else:
            want = set(MIDDLE) | set(TELEPORT) | set(TERMINAL)
        if r not in want:
            viol.append(f"node {v} has role {r} but its embedding says {sorted(want)}")
    # every merger edge must be explained by one of the graphs or a gadget
    explained = set()
    for b, u in enumerate((u0, u1)):
        e = m.embed(b)
        explained |= {norm_edge(e[x], e[y]) for x, y in u.graph.edges}
    for w in gm.nodes:
        if m.roles.get(w) in (*MIDDLE, *TELEPORT):
            explained |= {norm_edge(w, n) for n in gm.neighbours(w)}
    for ed in sorted(gm.edges - explained):
        viol.append(f"merger edge {ed} is not the image of any edge")
    # order
    pos = {v: k for k, v in enumerate(m.total_order)}
    if len(pos) != len(m.total_order):
        viol.append("total order lists a node twice")
    outs = set(gm.outputs)
    if set(pos) & outs:
        viol.append(f"outputs in the total order: {sorted(set(pos) & outs)}")
    if set(pos) | outs != set(gm.nodes):
        viol.append(f"nodes neither ordered nor output: {sorted(set(gm.nodes) - set(pos) - outs)}")
    for b, u in enumerate((u0, u1)):
        e = m.embed(b)
        for x, y in sorted(u.gflow.closure()):
            a, c = e[x], e[y]
            if a in pos and c in pos and pos[a] >= pos[c]:
                viol.append(f"total order violates {x} < {y} of U{b}")
    mids = m.middles()
    if mids:
        last_mid = max(pos.get(w, -1) for w in mids)
        first_other = min((pos[v] for v in pos if v not in mids), default=len(pos))
        if last_mid > first_other:
            viol.append("middle nodes are not measured first")
    for t in m.nodes_with_role(*TELEPORT):
        try:
            v, _ = m.teleport_parts(t)
        except ValueError as exc:
            viol.append(str(exc))
            continue
        if v in pos and t in pos and pos[v] > pos[t]:
            viol.append(f"teleport middle {t} is measured before {v}")
    return MergerReport(viol)


def _preimages(m: MergerGraph, v: int) -> list[int | None]:
    inv = []
    for b in (0, 1):
        inv.append(next((x for x, y in m.embed(b).items() if y == v), None))
    return inv


def single_owner_edges(m: MergerGraph, g0: OpenGraph, g1: OpenGraph) -> list[tuple[tuple[int, int], int]]:
    """Direct merger edges present in one graph although both ends exist in both."""
    both = set(m.embed0.values()) & set(m.embed1.values())
    present = [
        {norm_edge(m.embed0[x], m.embed0[y]) for x, y in g0.edges},
        {norm_edge(m.embed1[x], m.embed1[y]) for x, y in g1.edges},
    ]
    out = []
    for ed in sorted(m.graph.edges):
        if ed[0] in both and ed[1] in both:
            in0, in1 = ed in present[0], ed in present[1]
            if in0 != in1:
                out.append((ed, 0 if in0 else 1))
    return out


def insert_middle_nodes(m: MergerGraph, g0: OpenGraph, g1: OpenGraph) -> MergerGraph:
    """Replace each single-owner edge u-v by u-w-v with a fresh middle w."""
    todo = single_owner_edges(m, g0, g1)
    if not todo:
        return m
    edges = set(m.graph.edges)
    roles = dict(m.roles)
    nxt = max(m.graph.nodes) + 1
    mids = []
    for (u, v), owner in todo:
        w = nxt
        nxt += 1
        edges.discard((u, v))
        edges |= {norm_edge(u, w), norm_edge(w, v)}
        roles[w] = MIDDLE[owner]
        mids.append(w)
    graph = OpenGraph(m.graph.nodes | set(mids), frozenset(edges), m.graph.inputs, m.graph.outputs)
    old_mids = [w for w in m.total_order if m.roles.get(w) in MIDDLE]
    rest = [v for v in m.total_order if v not in old_mids]
    return replace(m, graph=graph, roles=roles, total_order=tuple(sorted(old_mids + mids)) + tuple(rest))


def mixed_outputs(m: MergerGraph, g0: OpenGraph, g1: OpenGraph) -> list[tuple[int, int]]:
    """(node, owner) for merger nodes that are an output in one graph only and measured in the other."""
    out = []
    for v in sorted(m.graph.nodes):
        p0, p1 = _preimages(m, v)
        if p0 is None or p1 is None:
            continue
        o0, o1 = p0 in g0.outputs, p1 in g1.outputs
        if o0 != o1:
            owner = 0 if o0 else 1
            if any(m.roles.get(u) == TELEPORT[owner] for u in m.graph.neighbours(v)):
                continue  # already teleported
            out.append((v, owner))
    return out


def insert_output_teleport(m: MergerGraph, v: int, g0: OpenGraph, g1: OpenGraph) -> MergerGraph:
    """Add v - v1 - v2 so the owner's output moves to v2 and v gets measured."""
    owner = dict(mixed_outputs(m, g0, g1)).get(v)
    if owner is None:
        raise ValueError(f"node {v} is not an output in exactly one graph and measured in the other")
    v1 = max(m.graph.nodes) + 1
    v2 = v1 + 1
    edges = set(m.graph.edges) | {norm_edge(v, v1), norm_edge(v1, v2)}
    outputs = tuple(x for x in m.graph.outputs if x != v) + (v2,)
    graph = OpenGraph(m.graph.nodes | {v1, v2}, frozenset(edges), m.graph.inputs, outputs)
    roles = dict(m.roles)
    roles[v1] = TELEPORT[owner]
    roles[v2] = TERMINAL[owner]
    order = list(m.total_order)
    if v in order:
        order.insert(order.index(v) + 1, v1)
    else:
        order.append(v1)
    return replace(m, graph=graph, roles=roles, total_order=tuple(order))


def branch_pattern(m: MergerGraph, u: MeasurementPattern, b: int) -> MeasurementPattern:
    """U_b renamed onto merger ids, extended by the teleport gadgets it owns."""
    e = m.embed(b)
    nodes = {e[x] for x in u.nodes}
    edges = {norm_edge(e[x], e[y]) for x, y in u.graph.edges}
    inputs = [e[x] for x in u.graph.inputs]
    outputs = [e[x] for x in u.graph.outputs]
    g = {e[x]: {e[y] for y in gy} for x, gy in u.gflow.g.items()}
    order = {(e[x], e[y]) for x, y in u.gflow.order}
    angles = {e[x]: k for x, k in u.angles.items()}
    for t in m.nodes_with_role(TELEPORT[b]):
        v, v2 = m.teleport_parts(t)
        nodes |= {t, v2}
        edges |= {norm_edge(v, t), norm_edge(t, v2)}
        outputs = [v2 if x == v else x for x in outputs]
        g[v] = {t}
        g[t] = {v2}
        order |= {(v, t), (t, v2)}
        angles[v] = 0
        angles[t] = 0
    graph = OpenGraph(frozenset(nodes), frozenset(edges), tuple(inputs), tuple(outputs))
    return MeasurementPattern(graph, GFlow(g, frozenset(order)), angles)


def output_relabel(m: MergerGraph, u: MeasurementPattern, b: int) -> dict[int, int]:
    """Merger output id -> U_b output id, following teleport terminals back."""
    e = m.embed(b)
    inv = {y: x for x, y in e.items()}
    out = {}
    tele = {m.teleport_parts(t)[0]: m.teleport_parts(t)[1] for t in m.nodes_with_role(TELEPORT[b])}
    for x in u.graph.outputs:
        gm = e[x]
        out[tele.get(gm, gm)] = inv[gm]
    return out


def swap_merger(m: MergerGraph) -> MergerGraph:
    """The same merger with the two computations' labels exchanged."""
    flip = {SHARED: SHARED}
    for pair in (ONLY, MIDDLE, TELEPORT, TERMINAL):
        flip[pair[0]], flip[pair[1]] = pair[1], pair[0]
    roles = {v: flip[r] for v, r in m.roles.items()}
    return MergerGraph(m.graph, m.embed1, m.embed0, m.total_order, roles)
