"""Client/server execution of delegated, UBQC and selectively blind runs.

Physical picture used by the client: in branch i the server register equals
P * L, where L is the logical graph state of the branch pattern and P is a
product of single-qubit operators Z(alpha + theta) X^a Z^z per node. theta and
a are the client's pads, z collects Z kicks from absent neighbours, padded
inputs and bridge/break middles, alpha is the Z(pi/2) left by a bridge.
Measuring P L at delta is the same as measuring L at
(-1)^a (delta - alpha - theta) + 4z, which is how every angle below is chosen.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .masking import (
    MaskClass,
    MaskingPlan,
    NodePlan,
    QUBIT_CLASSES,
    branch_patterns,
    classify_nodes,
    is_private_input,
    optimize_clifford_pi_difference,
)
from .merge import (
    MIDDLE,
    TELEPORT,
    TERMINAL,
    MergerGraph,
    mixed_outputs,
    output_relabel,
    role_owner,
    single_owner_edges,
    verify_merger,
)
from .pattern import MeasurementPattern, PatternError, corrected_angle, octant, verify_gflow
from .statevec import (
    X,
    Z,
    Computational,
    OutcomeSource,
    PlusTheta,
    SimulationError,
    StateVector,
    apply_cz,
    apply_frame,
    apply_single,
    measure_xy,
    output_byproducts,
    prepare,
    zrot,
)


class ProtocolError(RuntimeError):
    pass


# messages -------------------------------------------------------------------


@dataclass(frozen=True)
class Message:
    """One server-visible event: prep, measure, outcome or output."""

    kind: str
    node: int
    value: object = None

    def encode(self) -> str:
        if self.kind == "output":
            return "output " + ",".join(map(str, self.value))
        return f"{self.kind} {self.node} {self.value}"


@dataclass
class Transcript:
    messages: list[Message] = field(default_factory=list)

    def append(self, msg: Message) -> None:
        self.messages.append(msg)

    def canonical(self) -> tuple:
        return tuple((m.kind, m.node, tuple(m.value) if isinstance(m.value, list) else m.value) for m in self.messages)

    def schema(self) -> tuple:
        return tuple((m.kind, m.node) for m in self.messages)

    def angles(self) -> dict[int, int]:
        return {m.node: m.value for m in self.messages if m.kind == "measure"}

    def outcomes(self) -> dict[int, int]:
        return {m.node: m.value for m in self.messages if m.kind == "outcome"}

    def tags(self) -> dict[int, str]:
        return {m.node: m.value for m in self.messages if m.kind == "prep"}

    def dump(self) -> str:
        return "\n".join(m.encode() for m in self.messages)


@dataclass
class ClientSecrets:
    choice: int
    theta: dict[int, int] = field(default_factory=dict)
    r: dict[int, int] = field(default_factory=dict)
    a: dict[int, int] = field(default_factory=dict)
    b: dict[int, int] = field(default_factory=dict)  # |b> bits of absent nodes
    c: dict[int, int] = field(default_factory=dict)  # middle preparation bits


# server ---------------------------------------------------------------------


class Server:
    """Honest server: holds the register, entangles and measures on request."""

    def __init__(self, src: OutcomeSource, rng: np.random.Generator, max_qubits: int = 14):
        self.src = src
        self.rng = rng
        self.max_qubits = max_qubits
        self.state = StateVector.empty()

    def receive_register(self, state: StateVector) -> None:
        for lab in state.labels:
            if lab in self.state.labels:
                raise SimulationError(f"qubit {lab} already present")
        if self.state.n + state.n > self.max_qubits:
            raise SimulationError(f"register would exceed {self.max_qubits} qubits")
        amps = np.multiply.outer(self.state.amplitudes, state.amplitudes)
        self.state = StateVector(amps, self.state.labels + state.labels)

    def receive_qubit(self, node: int, kind) -> None:
        self.state = prepare(self.state, node, kind, self.max_qubits)

    def prepare_plus(self, node: int) -> None:
        self.state = prepare(self.state, node, PlusTheta(0), self.max_qubits)

    def entangle(self, edges) -> None:
        for u, v in sorted(edges):
            self.state = apply_cz(self.state, u, v)

    def teleport_angle(self, node: int) -> int:
        return 4 * int(self.rng.integers(2))

    def measure(self, node: int, delta: int) -> int:
        t, self.state, _ = measure_xy(self.state, node, delta, self.src)
        return t

    def return_outputs(self) -> StateVector:
        return self.state


class Channel:
    """Synchronous link that records everything the server sees."""

    def __init__(self, server: Server, transcript: Transcript | None = None):
        self.server = server
        self.transcript = transcript if transcript is not None else Transcript()

    def prep(self, node: int, tag: str) -> None:
        self.transcript.append(Message("prep", node, tag))

    def measure(self, node: int, delta: int) -> int:
        self.transcript.append(Message("measure", node, delta))
        t = self.server.measure(node, delta)
        self.transcript.append(Message("outcome", node, t))
        return t

    def teleport(self, node: int) -> tuple[int, int]:
        delta = self.server.teleport_angle(node)
        return delta, self.measure(node, delta)

    def outputs(self, nodes) -> StateVector:
        self.transcript.append(Message("output", -1, list(nodes)))
        return self.server.return_outputs()


# instances ------------------------------------------------------------------


@dataclass(frozen=True)
class ProtocolInstance:
    u0: MeasurementPattern
    u1: MeasurementPattern
    merger: MergerGraph
    plan: MaskingPlan
    input_spec: Mapping[int, str] = field(default_factory=dict)
    # fixed client inputs per branch (labelled by the branch pattern's own ids)
    inputs: tuple[StateVector | None, StateVector | None] = (None, None)
    name: str = ""

    def __post_init__(self):
        pats = branch_patterns(self.merger, self.u0, self.u1)
        object.__setattr__(self, "pats", pats)
        missing = set(self.merger.graph.nodes) - set(self.plan.nodes)
        if missing:
            raise ProtocolError(f"plan has no entry for nodes {sorted(missing)}")
        for v, p in self.plan.nodes.items():
            if p.rule == "i" and p.theta_levels == 1:
                raise ProtocolError(f"node {v} uses rule i without a theta pad")

    def pattern(self, b: int) -> MeasurementPattern:
        return self.u1 if b else self.u0

    def with_plan(self, plan: MaskingPlan) -> "ProtocolInstance":
        return ProtocolInstance(self.u0, self.u1, self.merger, plan, self.input_spec, self.inputs, self.name)


def check_instance(u0, u1, merger: MergerGraph) -> list[str]:
    problems = []
    for b, u in enumerate((u0, u1)):
        rep = verify_gflow(u)
        if not rep.ok:
            problems += [f"U{b}: {v}" for v in rep.violations]
    if problems:
        return problems
    rep = verify_merger(merger, u0, u1)
    problems += rep.violations
    if problems:
        return problems
    for ed, owner in single_owner_edges(merger, u0.graph, u1.graph):
        problems.append(f"edge {ed} belongs to U{owner} only and has no middle node")
    for v, owner in mixed_outputs(merger, u0.graph, u1.graph):
        problems.append(f"node {v} is an output of U{owner} only and needs an output teleport")
    for b, p in enumerate(branch_patterns(merger, u0, u1)):
        rep = verify_gflow(p)
        problems += [f"extended U{b}: {v}" for v in rep.violations]
    return problems


def build_instance(
    u0: MeasurementPattern,
    u1: MeasurementPattern,
    merger: MergerGraph,
    input_spec: Mapping[int, str] | None = None,
    inputs=(None, None),
    optimize: bool = True,
    name: str = "",
) -> ProtocolInstance:
    problems = check_instance(u0, u1, merger)
    if problems:
        raise ProtocolError("; ".join(problems))
    plan = classify_nodes(u0, u1, merger, input_spec)
    if optimize:
        plan = optimize_clifford_pi_difference(plan, u0, u1, merger)
    return ProtocolInstance(u0, u1, merger, plan, dict(input_spec or {}), tuple(inputs), name)


# the client -----------------------------------------------------------------


@dataclass
class _Frame:
    """Per-node operator P = Z(alpha + theta) X^a Z^z in front of the logical state."""

    theta: int = 0
    alpha: int = 0
    a: int = 0
    z: int = 0

    def logical_angle(self, delta: int) -> int:
        d = delta - self.alpha - self.theta
        return octant((-d if self.a else d) + 4 * self.z)

    def choose(self, phi: int, r: int) -> int:
        return octant(self.alpha + self.theta + (-phi if self.a else phi) + 4 * (self.z ^ r))


def _discard(state: StateVector, label: int) -> StateVector:
    """Drop a qubit known to be unentangled from the rest."""
    ax = state.axis(label)
    amps = np.moveaxis(state.amplitudes, ax, 0)
    k = int(np.argmax([np.linalg.norm(amps[0]), np.linalg.norm(amps[1])]))
    rest = amps[k] / np.linalg.norm(amps[k])
    return StateVector(rest, state.labels[:ax] + state.labels[ax + 1 :])


@dataclass
class _Run:
    instance: ProtocolInstance
    choice: int
    secrets: ClientSecrets
    frames: dict[int, _Frame]
    channel: Channel


def _sources(mask: MaskClass) -> str:
    return "client" if mask in QUBIT_CLASSES or mask is MaskClass.PUBLIC else "server"


def sbqc_prepare(
    instance: ProtocolInstance,
    i: int,
    input_state: StateVector | None,
    rng: np.random.Generator,
    server: Server | None = None,
    force_r: int | None = None,
) -> _Run:
    """Sample secrets, send/prepare every qubit and entangle the merger graph."""
    m = instance.merger
    plan = instance.plan
    pats = instance.pats
    p = pats[i]
    if server is None:
        server = Server(OutcomeSource.seeded(int(rng.integers(2**63))), np.random.default_rng(int(rng.integers(2**63))))
    channel = Channel(server)
    sec = ClientSecrets(choice=i)
    frames: dict[int, _Frame] = {}

    def draw_theta(levels: int) -> int:
        if levels == 8:
            return int(rng.integers(8))
        if levels == 4:
            return 2 * int(rng.integers(4))
        return 0

    # secrets first, in node order, so both branches consume the stream alike
    for v in sorted(m.graph.nodes):
        np_ = plan[v]
        sec.theta[v] = draw_theta(np_.theta_levels)
        if np_.rule in ("i", "ii"):
            sec.r[v] = int(rng.integers(2)) if force_r is None else force_r
        sec.a[v] = int(rng.integers(2))
        sec.b[v] = int(rng.integers(2))
        sec.c[v] = int(rng.integers(2))

    # input register: relabel onto merger ids and pad
    e = m.embed(i)
    if input_state is None:
        input_state = instance.inputs[i]
    if input_state is None:
        input_state = StateVector.product({x: (1, 1) for x in instance.pattern(i).graph.inputs})
    reg = input_state.relabel(e)
    if sorted(reg.labels) != sorted(p.graph.inputs):
        raise ProtocolError(f"input labels {input_state.labels} do not match U{i} inputs")
    for v in p.graph.inputs:
        fr = _Frame()
        if is_private_input(v, i, pats, instance.input_spec):
            fr.a = sec.a[v]
        else:
            sec.a[v] = 0
        fr.theta = sec.theta[v]
        if fr.a:
            reg = apply_single(reg, v, X)
        if fr.theta:
            reg = apply_single(reg, v, zrot(fr.theta))
        frames[v] = fr
    server.receive_register(reg)

    for v in sorted(m.graph.nodes):
        np_ = plan[v]
        role = m.roles.get(v, "")
        channel.prep(v, _sources(np_.mask))
        if v in p.graph.inputs:
            continue
        if role in MIDDLE:
            if role_owner(role) == i:
                server.receive_qubit(v, PlusTheta(4 * sec.c[v]))
            else:
                server.receive_qubit(v, Computational(sec.c[v]))
            continue
        if role in TELEPORT:
            if role_owner(role) == i:
                frames[v] = _Frame(theta=4 * sec.c[v])
                server.receive_qubit(v, PlusTheta(4 * sec.c[v]))
            else:
                server.receive_qubit(v, Computational(sec.c[v]))
            continue
        if role in TERMINAL:
            if role_owner(role) == i:
                frames[v] = _Frame()
            server.prepare_plus(v)
            continue
        if v not in p.nodes:
            server.receive_qubit(v, Computational(sec.b[v]))
            continue
        fr = _Frame(theta=sec.theta[v])
        frames[v] = fr
        if _sources(np_.mask) == "client":
            server.receive_qubit(v, PlusTheta(fr.theta))
        else:
            if fr.theta:
                raise ProtocolError(f"node {v} has a theta pad but is server-prepared")
            server.prepare_plus(v)
    server.entangle(m.graph.edges)

    # Z kicks known at preparation time
    for v, fr in frames.items():
        for u in m.graph.neighbours(v):
            role = m.roles.get(u, "")
            if role in MIDDLE:
                if role_owner(role) != i:
                    fr.z ^= sec.c[u]
            elif role in TELEPORT:
                if role_owner(role) != i:
                    fr.z ^= sec.c[u]
            elif role in TERMINAL:
                continue
            elif u not in p.nodes:
                fr.z ^= sec.b[u]
        if v in p.nodes:
            for u in p.graph.neighbours(v):
                if is_private_input(u, i, pats, instance.input_spec):
                    fr.z ^= sec.a[u]
    return _Run(instance, i, sec, frames, channel)


def sbqc_compute(run: _Run) -> tuple[StateVector, dict[int, int], Transcript]:
    """Drive every measurement and recover the output of U_i."""
    inst = run.instance
    m = inst.merger
    plan = inst.plan
    i = run.choice
    p = inst.pats[i]
    other = inst.pats[1 - i]
    sec = run.secrets
    ch = run.channel
    s: dict[int, int] = {}

    for v in m.total_order:
        np_ = plan[v]
        role = m.roles.get(v, "")
        if role in MIDDLE:
            t = ch.measure(v, 2)
            if role_owner(role) == i:
                # X^a pads on the sides leave this residual unchanged
                for u in m.graph.neighbours(v):
                    run.frames[u].alpha = octant(run.frames[u].alpha + 2)
                    run.frames[u].z ^= t ^ sec.c[v]
            continue
        if role in TELEPORT:
            delta, t = ch.teleport(v)
            if v in p.nodes:
                s[v] = _logical_outcome(p, v, run.frames[v], delta, t, s)
            continue
        if v not in p.nodes:
            default = other.angles.get(v, 0)
            r = sec.r.get(v, 0)
            ch.measure(v, octant(default + sec.theta[v] + 4 * r))
            continue
        fr = run.frames[v]
        phi = corrected_angle(p, v, s)
        if np_.rule in ("i", "ii"):
            r = sec.r[v]
        elif np_.rule == "iii":
            r = 0
        else:
            raise ProtocolError(f"node {v} is measured but has rule {np_.rule!r}")
        if np_.rule != "i" and fr.theta:
            raise ProtocolError(f"node {v} carries a pad but rule {np_.rule} ignores it")
        delta = fr.choose(phi, r)
        t = ch.measure(v, delta)
        s[v] = _logical_outcome(p, v, fr, delta, t, s)

    outs = sorted(m.graph.outputs)
    state = ch.outputs(outs)
    for o in outs:
        if o not in p.graph.outputs:
            state = _discard(state, o)
    for o in p.graph.outputs:
        fr = run.frames[o]
        if fr.alpha or fr.theta:
            state = apply_single(state, o, zrot(-(fr.alpha + fr.theta)))
        if fr.a:
            state = apply_single(state, o, X)
        if fr.z:
            state = apply_single(state, o, Z)
    state = apply_frame(state, output_byproducts(p, s))
    relabel = output_relabel(m, inst.pattern(i), i)
    state = state.relabel(relabel).reordered(inst.pattern(i).graph.outputs)
    return state, s, ch.transcript


def _logical_outcome(p: MeasurementPattern, v: int, fr: _Frame, delta: int, t: int, s: Mapping[int, int]) -> int:
    phi = corrected_angle(p, v, s)
    diff = octant(fr.logical_angle(delta) - phi)
    if diff % 4:
        raise ProtocolError(f"node {v} measured at logical angle off by {diff} octants")
    return t ^ (diff // 4)


def sbqc_run(
    instance: ProtocolInstance,
    i: int,
    input_state: StateVector | None = None,
    seed: int | None = 0,
    src: OutcomeSource | None = None,
    force_r: int | None = None,
) -> tuple[StateVector, dict[int, int], Transcript, ClientSecrets]:
    """One honest run for choice bit i."""
    ss = np.random.SeedSequence(seed)
    client_ss, server_ss, quantum_ss = ss.spawn(3)
    server = Server(
        src if src is not None else OutcomeSource.seeded(int(quantum_ss.generate_state(1)[0])),
        np.random.default_rng(server_ss),
    )
    run = sbqc_prepare(instance, i, input_state, np.random.default_rng(client_ss), server, force_r)
    out, s, tr = sbqc_compute(run)
    return out, s, tr, run.secrets


# UBQC ------------------------------------------------------------------------


def identity_merger(pattern: MeasurementPattern) -> MergerGraph:
    ident = {v: v for v in pattern.nodes}
    return MergerGraph(pattern.graph, ident, ident, tuple(pattern.measurement_order()), {v: "shared" for v in pattern.nodes})


def ubqc_instance(pattern: MeasurementPattern) -> ProtocolInstance:
    """Every measured node padded over all 8 octants; inputs one-time padded."""
    m = identity_merger(pattern)
    nodes = {}
    for v in pattern.nodes:
        is_in = v in pattern.graph.inputs
        if v in pattern.graph.outputs:
            nodes[v] = NodePlan(MaskClass.ENCRYPTED if is_in else MaskClass.NO_MASK, "output", 8 if is_in else 1)
        elif is_in:
            nodes[v] = NodePlan(MaskClass.ENCRYPTED, "i", 8, True)
        else:
            nodes[v] = NodePlan(MaskClass.QUARTER_PI, "i", 8, True)
    plan = MaskingPlan(nodes, frozenset(pattern.graph.measured))
    return ProtocolInstance(pattern, pattern, m, plan, {}, (None, None), "ubqc")


def ubqc_run(
    pattern: MeasurementPattern,
    input_state: StateVector | None,
    seed: int | None = 0,
    src: OutcomeSource | None = None,
    force_r: int | None = None,
) -> tuple[StateVector, Transcript, dict[int, int], ClientSecrets]:
    out, s, tr, sec = sbqc_run(ubqc_instance(pattern), 0, input_state, seed, src, force_r)
    return out, tr, s, sec


def delegated_run(pattern: MeasurementPattern, input_state: StateVector | None, seed: int | None = 0):
    """Unmasked delegation: the server sees every angle and outcome."""
    m = identity_merger(pattern)
    nodes = {
        v: NodePlan(MaskClass.PUBLIC if v in pattern.graph.inputs else MaskClass.NO_MASK,
                    "output" if v in pattern.graph.outputs else "iii")
        for v in pattern.nodes
    }
    spec = {v: "public" for v in pattern.graph.inputs}
    inst = ProtocolInstance(pattern, pattern, m, MaskingPlan(nodes), spec, (None, None), "delegated")
    out, s, tr, _ = sbqc_run(inst, 0, input_state, seed)
    return out, tr, s


# bridge / break unit ---------------------------------------------------------


def bridge_break_unit(
    state: StateVector, middle: int, sides: tuple[int, int], mode: str, c: int, src: OutcomeSource
) -> StateVector:
    """Measure the middle of side - middle - side and apply the gadget correction.

    bridge leaves CZ(rho1 x rho2), break leaves rho1 x rho2.
    """
    if mode not in ("bridge", "break"):
        raise ValueError(f"unknown mode {mode!r}")
    ax = state.axis(middle)
    amps = np.moveaxis(state.amplitudes, ax, 0)
    pz = float(np.linalg.norm(amps[c & 1]) ** 2)
    if mode == "break" and pz < 1 - 1e-9:
        raise ProtocolError(f"break needs the middle in |{c}>")
    if mode == "bridge" and (pz > 1 - 1e-9 or pz < 1e-9):
        raise ProtocolError("bridge needs the middle in |+> or |->")
    b, state, _ = measure_xy(state, middle, 2, src)
    for u in sides:
        if mode == "bridge":
            state = apply_single(state, u, zrot(-2))
            if b ^ c:
                state = apply_single(state, u, Z)
        elif c:
            state = apply_single(state, u, Z)
    return state
