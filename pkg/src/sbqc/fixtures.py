"""Small hand-built instances, each exercising one masking situation.

Every builder returns a validated ProtocolInstance. The expected plans and
costs were counted by hand from the cones and are frozen in the tests.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .merge import MergerGraph, insert_middle_nodes, insert_output_teleport
from .pattern import MeasurementPattern, OpenGraph, make_pattern, norm_edge
from .protocol import ProtocolInstance, build_instance
from .statevec import StateVector


def chain(nodes, angles, inputs=None, outputs=None) -> MeasurementPattern:
    """Linear cluster with g(k) = next node."""
    nodes = list(nodes)
    edges = list(zip(nodes, nodes[1:]))
    g = {a: {b} for a, b in edges}
    return make_pattern(nodes, edges, inputs or nodes[:1], outputs or nodes[-1:], g, angles)


def identity_embedding(u0: MeasurementPattern, u1: MeasurementPattern, order, roles=None) -> MergerGraph:
    nodes = u0.nodes | u1.nodes
    edges = u0.graph.edges | u1.graph.edges
    ins = tuple(dict.fromkeys(u0.graph.inputs + u1.graph.inputs))
    outs = tuple(dict.fromkeys(u0.graph.outputs + u1.graph.outputs))
    if roles is None:
        roles = {}
    full = {}
    for v in nodes:
        if v in roles:
            full[v] = roles[v]
        elif v in u0.nodes and v in u1.nodes:
            full[v] = "shared"
        else:
            full[v] = "only0" if v in u0.nodes else "only1"
    graph = OpenGraph(frozenset(nodes), frozenset(edges), ins, outs)
    return MergerGraph(graph, {v: v for v in u0.nodes}, {v: v for v in u1.nodes}, tuple(order), full)


def qubit(cos_t: float, phi: float) -> np.ndarray:
    return np.array([cos_t, np.sqrt(1 - cos_t**2) * np.exp(1j * phi)])


def _ladder(angles) -> MeasurementPattern:
    # two wires 1-2-3-4 and 5-6-7-8 with rungs 2-6 and 3-7
    edges = [(1, 2), (2, 3), (3, 4), (5, 6), (6, 7), (7, 8), (2, 6), (3, 7)]
    g = {1: {2}, 2: {3}, 3: {4}, 5: {6}, 6: {7}, 7: {8}}
    return make_pattern(range(1, 9), edges, (1, 5), (4, 8), g, angles)


def _ladder_inputs():
    st = StateVector.product({1: qubit(0.8, 0.3), 5: qubit(0.6, -1.1)})
    return st, st


def angle_difference() -> ProtocolInstance:
    """Node 2 differs (pi/4 vs 3pi/4); its cone holds 3 (odd) and 7 (Z-dependent)."""
    base = {1: 0, 3: 5, 5: 2, 6: 4, 7: 6}
    u0 = _ladder({**base, 2: 1})
    u1 = _ladder({**base, 2: 3})
    m = identity_embedding(u0, u1, u0.measurement_order())
    return build_instance(u0, u1, m, {1: "public", 5: "public"}, _ladder_inputs(), name="angle_difference")


def input_target() -> ProtocolInstance:
    """Target is public input 1; its cone has three odd interior nodes."""
    base = {2: 1, 3: 3, 5: 0, 6: 2, 7: 5}
    u0 = _ladder({**base, 1: 0})
    u1 = _ladder({**base, 1: 1})
    m = identity_embedding(u0, u1, u0.measurement_order())
    return build_instance(u0, u1, m, {1: "public", 5: "public"}, _ladder_inputs(), name="input_target")


def private_input(odd: bool = False) -> ProtocolInstance:
    """Same 3-chain twice with a private input; only the hidden input matters."""
    u = chain([1, 2, 3], {1: 0, 2: 3 if odd else 0})
    m = identity_embedding(u, u, u.measurement_order())
    st = StateVector.product({1: qubit(0.9, 0.7)})
    return build_instance(u, u, m, {1: "private"}, (st, st), name="private_input_odd" if odd else "private_input")


def bridge_break() -> ProtocolInstance:
    """Wires 1-2-3 and 4-5-6; the rung 2-5 exists in U0 only and gets a middle."""
    angles = {1: 2, 2: 1, 4: 0, 5: 3}
    edges = [(1, 2), (2, 3), (4, 5), (5, 6)]
    g = {1: {2}, 2: {3}, 4: {5}, 5: {6}}
    u0 = make_pattern(range(1, 7), edges + [(2, 5)], (1, 4), (3, 6), g, angles)
    u1 = make_pattern(range(1, 7), edges, (1, 4), (3, 6), g, angles)
    m = identity_embedding(u0, u1, (1, 4, 2, 5))
    m = insert_middle_nodes(m, u0.graph, u1.graph)
    st = StateVector.product({1: qubit(0.7, 0.4), 4: qubit(0.3, 2.0)})
    return build_instance(u0, u1, m, {1: "public", 4: "public"}, (st, st), name="bridge_break")


def deleted_vertex() -> ProtocolInstance:
    """U0 hangs the branch 2-4-5 off node 2; U1 is the bare chain 1-2-3."""
    u0 = make_pattern(
        range(1, 6),
        [(1, 2), (2, 3), (2, 4), (4, 5)],
        (1,),
        (3, 5),
        {1: {2}, 2: {3}, 4: {5}},
        {1: 3, 2: 1, 4: 2},
    )
    u1 = chain([1, 2, 3], {1: 3, 2: 1})
    m = identity_embedding(u0, u1, u0.measurement_order())
    st = StateVector.product({1: qubit(0.5, 0.9)})
    return build_instance(u0, u1, m, {1: "public"}, (st, st), name="deleted_vertex")


def mixed_input() -> ProtocolInstance:
    """U0 = chain 1-2-3-4 with input 1; U1 = chain 10-11-12 embedded on 2-3-4."""
    u0 = chain([1, 2, 3, 4], {1: 1, 2: 2, 3: 3})
    u1 = chain([10, 11, 12], {10: 2, 11: 3})
    emb1 = {10: 2, 11: 3, 12: 4}
    graph = OpenGraph(frozenset(range(1, 5)), frozenset(norm_edge(a, b) for a, b in [(1, 2), (2, 3), (3, 4)]), (1, 2), (4,))
    roles = {1: "only0", 2: "shared", 3: "shared", 4: "shared"}
    m = MergerGraph(graph, {v: v for v in u0.nodes}, emb1, (1, 2, 3), roles)
    ins = (StateVector.product({1: qubit(0.4, 1.3)}), StateVector.product({10: qubit(0.95, -0.6)}))
    return build_instance(u0, u1, m, {1: "private", 2: "private"}, ins, name="mixed_input")


def output_teleport() -> ProtocolInstance:
    """Node 3 is U0's output but measured in U1; U0's output moves to a new terminal."""
    u0 = chain([1, 2, 3], {1: 1, 2: 6})
    u1 = chain([1, 2, 3, 4, 5], {1: 1, 2: 6, 3: 5, 4: 2})
    m = identity_embedding(u0, u1, (1, 2, 3, 4))
    m = insert_output_teleport(m, 3, u0.graph, u1.graph)
    st = StateVector.product({1: qubit(0.6, 0.5)})
    return build_instance(u0, u1, m, {1: "public"}, (st, st), name="output_teleport")


# the suite used for end-to-end and blindness checks
SUITE: dict[str, Callable[[], ProtocolInstance]] = {
    "angle_difference": angle_difference,
    "bridge_break": bridge_break,
    "deleted_vertex": deleted_vertex,
    "mixed_input": mixed_input,
    "output_teleport": output_teleport,
}

ALL: dict[str, Callable[[], ProtocolInstance]] = {
    **SUITE,
    "input_target": input_target,
    "private_input": private_input,
    "private_input_odd": lambda: private_input(odd=True),
}

# node -> class name and total qubits sent, counted by hand
EXPECTED = {
    "angle_difference": (
        {1: "PublicInput", 2: "QuantumQuarterPi", 3: "QuantumHalfPi", 4: "NoMask", 5: "PublicInput",
         6: "NoMask", 7: "ClassicalPi", 8: "NoMask"},
        2,
    ),
    "input_target": (None, 4),
    "private_input": ({1: "EncryptedInput", 2: "ClassicalPi", 3: "NoMask"}, 1),
    "private_input_odd": ({1: "EncryptedInput", 2: "QuantumHalfPi", 3: "NoMask"}, 2),
    "bridge_break": (
        {1: "PublicInput", 2: "QuantumHalfPi", 3: "NoMask", 4: "PublicInput", 5: "QuantumHalfPi",
         6: "NoMask", 7: "BridgeBreakMiddle"},
        3,
    ),
    "deleted_vertex": (
        {1: "PublicInput", 2: "ClassicalPi", 3: "NoMask", 4: "DeleteOrKeep", 5: "DeleteOrKeep"},
        2,
    ),
    "mixed_input": ({1: "DeleteOrKeep", 2: "EncryptedInput", 3: "QuantumHalfPi", 4: "NoMask"}, 3),
    "output_teleport": (
        {1: "PublicInput", 2: "NoMask", 3: "QuantumQuarterPi", 4: "DeleteOrKeep", 5: "DeleteOrKeep",
         6: "TeleportMiddle", 7: "NoMask"},
        4,
    ),
}


def random_pattern(
    rng: np.random.Generator,
    n_measured: int,
    n_outputs: int = 2,
    n_inputs: int = 1,
    edge_p: float = 0.3,
    odd_only: bool = False,
) -> MeasurementPattern:
    """Random pattern with a causal flow f, so g(i) = {f(i)}.

    Nodes are numbered in a topological order. Extra edges are only kept when
    they leave the flow conditions intact.
    """
    n = n_measured + n_outputs
    n_inputs = min(n_inputs, n_measured, n_outputs)  # f must be injective into non-inputs
    while True:
        f: dict[int, int] = {}
        used: set[int] = set()
        ok = True
        for i in range(n_measured):
            choices = [j for j in range(max(i + 1, n_inputs), n) if j not in used]
            if not choices:
                ok = False
                break
            j = int(rng.choice(choices))
            f[i] = j
            used.add(j)
        if ok and len(used) == n_measured:
            break
    pre = {j: i for i, j in f.items()}
    edges = {norm_edge(i, j) for i, j in f.items()}
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) in edges or rng.random() >= edge_p:
                continue
            # u becomes a neighbour of v: if v = f(i) then u must not precede i
            if v in pre and u < pre[v]:
                continue
            if u in pre and v < pre[u]:
                continue
            edges.add((u, v))
    if odd_only:
        angles = {i: int(rng.choice([1, 3, 5, 7])) for i in range(n_measured)}
    else:
        angles = {i: int(rng.integers(8)) for i in range(n_measured)}
    inputs = tuple(range(n_inputs))
    outputs = tuple(sorted(set(range(n)) - set(f)))
    return make_pattern(range(n), edges, inputs, outputs, {i: {j} for i, j in f.items()}, angles)


def random_state(rng: np.random.Generator, labels) -> StateVector:
    labels = list(labels)
    v = rng.normal(size=2 ** len(labels)) + 1j * rng.normal(size=2 ** len(labels))
    return StateVector.from_vector(v / np.linalg.norm(v), labels)


# a node whose unmasking must be visible to the server
SABOTAGE_TARGET = {
    "angle_difference": 2,
    "bridge_break": 2,
    "deleted_vertex": 4,
    "mixed_input": 1,
    "output_teleport": 3,
}
