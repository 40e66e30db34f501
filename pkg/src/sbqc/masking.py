"""Future cones, influence sets and per-node masking plans."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping

from .merge import MIDDLE, TELEPORT, TERMINAL, MergerGraph, branch_pattern, role_owner
from .pattern import MeasurementPattern, PatternError, correction_sets, odd_neighbourhood


@dataclass(frozen=True)
class FutureCone:
    cone: frozenset[int]
    interior: frozenset[int]
    zdep: frozenset[int] = frozenset()


def future_cone(pattern: MeasurementPattern, v: int) -> FutureCone:
    """Everything whose angle may depend, directly or not, on the outcome of v.

    ``interior`` holds the measured nodes that take an X-correction from v or a
    cone member; ``zdep`` those that take a Z-correction. Outputs are kept in
    the cone but never in the interior since they carry no angle.
    """
    graph = pattern.graph
    if v not in graph.nodes:
        raise PatternError(f"unknown node {v}")
    if v in graph.outputs:
        raise PatternError(f"node {v} is an output")
    g = pattern.gflow.g
    cone: set[int] = set()
    interior: set[int] = set()
    zdep: set[int] = set()
    frontier = [v]
    seen = {v}
    while frontier:
        j = frontier.pop()
        gj = g.get(j, frozenset())
        xs = gj - {j}
        zs = odd_neighbourhood(graph, gj) - {j}
        interior |= xs
        zdep |= zs
        for w in xs | zs:
            cone.add(w)
            if w not in seen:
                seen.add(w)
                frontier.append(w)
    measured = graph.measured
    return FutureCone(frozenset(cone), frozenset(interior & measured), frozenset(zdep & measured))


def qubit_masked_nodes(pattern: MeasurementPattern, cone: FutureCone) -> frozenset[int]:
    """Interior members with an odd-octant angle."""
    return frozenset(w for w in cone.interior if pattern.angles.get(w, 0) % 2 == 1)


# influence sets --------------------------------------------------------------


@dataclass(frozen=True)
class InfluenceSets:
    """Per-branch sources of X, Z and Z(pi/2) effects on one node."""

    x: tuple[frozenset[int], frozenset[int]]
    z: tuple[frozenset[int], frozenset[int]]
    r: tuple[frozenset[int], frozenset[int]]
    # the part of z/r that comes from gadgets and key bits rather than g-flow
    extra: tuple[frozenset[int], frozenset[int]] = (frozenset(), frozenset())

    @property
    def x_influence(self) -> frozenset[int]:
        return self.x[0] | self.x[1]

    @property
    def z_influence(self) -> frozenset[int]:
        return self.z[0] | self.z[1]

    @property
    def r_influence(self) -> frozenset[int]:
        return self.r[0] | self.r[1]

    def differs(self) -> set[str]:
        out = set()
        for name in ("x", "z", "r"):
            a, b = getattr(self, name)
            if a != b:
                out.add(name)
        return out


def is_public_input(v: int, p0: MeasurementPattern, p1: MeasurementPattern, input_spec: Mapping[int, str]) -> bool:
    """Declared public and an input of both computations."""
    return input_spec.get(v) == "public" and v in p0.graph.inputs and v in p1.graph.inputs


def is_private_input(v: int, b: int, pats, input_spec: Mapping[int, str]) -> bool:
    """Input of branch b that is one-time padded with X^a Z(theta)."""
    return v in pats[b].graph.inputs and not is_public_input(v, pats[0], pats[1], input_spec)


def influence_sets(
    merger: MergerGraph,
    pats: tuple[MeasurementPattern, MeasurementPattern],
    v: int,
    input_spec: Mapping[int, str] | None = None,
) -> InfluenceSets:
    input_spec = input_spec or {}
    if v not in merger.graph.nodes:
        raise PatternError(f"unknown node {v}")
    xs, zs, rs, extras = [], [], [], []
    for b in (0, 1):
        p = pats[b]
        if v not in p.nodes:
            xs.append(frozenset())
            zs.append(frozenset())
            rs.append(frozenset())
            extras.append(frozenset())
            continue
        x, z = correction_sets(p, v)
        extra = set()
        r = set()
        for u in merger.graph.neighbours(v):
            role = merger.roles.get(u, "")
            if role in MIDDLE:
                extra.add(u)
                if role_owner(role) == b:
                    r.add(u)
            elif role in TERMINAL:
                continue
            elif u not in p.nodes:
                extra.add(u)  # absent neighbour prepared in a computational basis state
        for u in p.graph.neighbours(v):
            if is_private_input(u, b, pats, input_spec):
                extra.add(u)
        xs.append(frozenset(x))
        zs.append(frozenset(z) | frozenset(extra))
        rs.append(frozenset(r))
        extras.append(frozenset(extra))
    return InfluenceSets(tuple(xs), tuple(zs), tuple(rs), tuple(extras))


# plans ----------------------------------------------------------------------


class MaskClass(str, Enum):
    NO_MASK = "NoMask"
    CLASSICAL_PI = "ClassicalPi"
    HALF_PI = "QuantumHalfPi"
    QUARTER_PI = "QuantumQuarterPi"
    DELETE_OR_KEEP = "DeleteOrKeep"
    MIDDLE = "BridgeBreakMiddle"
    TELEPORT = "TeleportMiddle"
    ENCRYPTED = "EncryptedInput"
    PUBLIC = "PublicInput"


# classes that make the client send a qubit
QUBIT_CLASSES = frozenset(
    {
        MaskClass.HALF_PI,
        MaskClass.QUARTER_PI,
        MaskClass.DELETE_OR_KEEP,
        MaskClass.MIDDLE,
        MaskClass.TELEPORT,
        MaskClass.ENCRYPTED,
    }
)

# measurement rules, in the order they are tried
RULES = ("middle", "teleport", "i", "ii", "iii", "output")


@dataclass(frozen=True)
class NodePlan:
    mask: MaskClass
    rule: str
    theta_levels: int = 1  # 1: no pad, 4: k*pi/2, 8: k*pi/4
    generator: bool = False
    reasons: tuple[str, ...] = ()
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class MaskingPlan:
    nodes: Mapping[int, NodePlan]
    generators: frozenset[int] = frozenset()
    cone: frozenset[int] = frozenset()
    interior: frozenset[int] = frozenset()
    zdep: frozenset[int] = frozenset()

    def __getitem__(self, v: int) -> NodePlan:
        return self.nodes[v]

    def classes(self) -> dict[int, MaskClass]:
        return {v: p.mask for v, p in self.nodes.items()}

    def quantum_masked(self) -> frozenset[int]:
        return frozenset(v for v, p in self.nodes.items() if p.mask in (MaskClass.HALF_PI, MaskClass.QUARTER_PI))

    def with_node(self, v: int, **changes) -> "MaskingPlan":
        nodes = dict(self.nodes)
        nodes[v] = replace(nodes[v], **changes)
        return replace(self, nodes=nodes)


def branch_patterns(merger: MergerGraph, u0: MeasurementPattern, u1: MeasurementPattern):
    return branch_pattern(merger, u0, 0), branch_pattern(merger, u1, 1)


def classify_nodes(
    u0: MeasurementPattern,
    u1: MeasurementPattern,
    merger: MergerGraph,
    input_spec: Mapping[int, str] | None = None,
) -> MaskingPlan:
    input_spec = dict(input_spec or {})
    pats = branch_patterns(merger, u0, u1)
    p0, p1 = pats
    nodes = sorted(merger.graph.nodes)

    def present(v, b):
        return v in pats[b].nodes

    def measured(v, b):
        return present(v, b) and v not in pats[b].graph.outputs

    infl = {v: influence_sets(merger, pats, v, input_spec) for v in nodes}
    gadget_roles = (*MIDDLE, *TELEPORT, *TERMINAL)

    reasons: dict[int, list[str]] = {v: [] for v in nodes}
    for v in nodes:
        if merger.roles.get(v) in gadget_roles:
            continue
        pr = (present(v, 0), present(v, 1))
        if pr[0] != pr[1]:
            reasons[v].append("deleted")
            continue
        if measured(v, 0) != measured(v, 1):
            raise PatternError(f"node {v} is an output in one graph only; insert an output teleport")
        if measured(v, 0) and p0.angles[v] != p1.angles[v]:
            reasons[v].append("angle")
        for name in sorted(infl[v].differs()):
            reasons[v].append(f"{name}-influence")
        if (infl[v].extra[0] or infl[v].extra[1]) and not {"z-influence"} & set(reasons[v]):
            reasons[v].append("key-offset")
        ins = (v in p0.graph.inputs, v in p1.graph.inputs)
        if ins[0] != ins[1]:
            reasons[v].append("input-collision")
        elif any(is_private_input(v, b, pats, input_spec) for b in (0, 1)):
            reasons[v].append("encrypted-input")
    generators = frozenset(v for v in nodes if reasons[v])

    cone: set[int] = set()
    interior: set[int] = set()
    zdep: set[int] = set()
    for v in generators:
        for b in (0, 1):
            if measured(v, b):
                fc = future_cone(pats[b], v)
                cone |= fc.cone
                interior |= fc.interior
                zdep |= fc.zdep

    plan: dict[int, NodePlan] = {}
    for v in nodes:
        role = merger.roles.get(v, "")
        gen = v in generators
        rs = tuple(reasons[v])
        if role in MIDDLE:
            plan[v] = NodePlan(MaskClass.MIDDLE, "middle")
            continue
        if role in TELEPORT:
            plan[v] = NodePlan(MaskClass.TELEPORT, "teleport")
            continue
        if role in TERMINAL:
            plan[v] = NodePlan(MaskClass.NO_MASK, "output")
            continue
        if "deleted" in rs:
            b = 0 if present(v, 0) else 1
            rule = "i" if measured(v, b) else "output"
            plan[v] = NodePlan(MaskClass.DELETE_OR_KEEP, rule, 4, True, rs)
            continue
        is_input = v in p0.graph.inputs or v in p1.graph.inputs
        public = is_public_input(v, p0, p1, input_spec)
        if not measured(v, 0):
            if is_input and not public:
                plan[v] = NodePlan(MaskClass.ENCRYPTED, "output", 4, gen, rs)
            elif public:
                plan[v] = NodePlan(MaskClass.PUBLIC, "output", 1, gen, rs)
            else:
                plan[v] = NodePlan(MaskClass.NO_MASK, "output", 1, gen, rs)
            continue
        if "angle" in rs:
            flags = ("input-with-angle-difference",) if is_input else ()
            plan[v] = NodePlan(MaskClass.QUARTER_PI, "i", 8, True, rs, flags)
            continue
        if is_input and not public:
            plan[v] = NodePlan(MaskClass.ENCRYPTED, "i", 4, True, rs)
            continue
        angle = p0.angles[v]
        odd = angle % 2 == 1
        level = 0
        if gen:
            level = 1
            if ("x-influence" in rs and odd) or "r-influence" in rs:
                level = 2
        if v in interior:
            level = max(level, 2 if odd else (1 if angle % 4 == 2 else 0))
        if v in zdep:
            level = max(level, 1)
        if public:
            if level == 2:
                plan[v] = NodePlan(MaskClass.ENCRYPTED, "i", 4, gen, rs, ("public-input-rotated",))
            else:
                plan[v] = NodePlan(MaskClass.PUBLIC, "ii" if level else "iii", 1, gen, rs)
            continue
        if level == 2:
            plan[v] = NodePlan(MaskClass.HALF_PI, "i", 4, gen, rs)
        elif level == 1:
            plan[v] = NodePlan(MaskClass.CLASSICAL_PI, "ii", 1, gen, rs)
        else:
            plan[v] = NodePlan(MaskClass.NO_MASK, "iii", 1, gen, rs)
    return MaskingPlan(plan, generators, frozenset(cone), frozenset(interior), frozenset(zdep))


def optimize_clifford_pi_difference(
    plan: MaskingPlan, u0: MeasurementPattern, u1: MeasurementPattern, merger: MergerGraph
) -> MaskingPlan:
    """Targets whose two angles are even octants differing by pi only need r*pi."""
    p0, p1 = branch_patterns(merger, u0, u1)
    for v, np_ in sorted(plan.nodes.items()):
        if np_.mask is not MaskClass.QUARTER_PI or np_.flags:
            continue
        a0, a1 = p0.angles[v], p1.angles[v]
        if a0 % 2 == 0 and a1 % 2 == 0 and (a0 - a1) % 8 == 4:
            plan = plan.with_node(v, mask=MaskClass.CLASSICAL_PI, rule="ii", theta_levels=1, flags=("clifford-pi",))
    return plan


def sabotage(plan: MaskingPlan, v: int) -> MaskingPlan:
    """Strip all masking from one node (used to check the harness catches leaks)."""
    return plan.with_node(v, mask=MaskClass.NO_MASK, rule="iii", theta_levels=1, flags=("sabotaged",))


# cost ------------------------------------------------------------------------


@dataclass(frozen=True)
class CostReport:
    qubits_sent: int
    breakdown: Mapping[str, int]
    outputs_returned: int
    baseline_ubqc_cost: int


def cost_report(plan: MaskingPlan, merger: MergerGraph) -> CostReport:
    sent = [p.mask for p in plan.nodes.values() if p.mask in QUBIT_CLASSES]
    counts = Counter(p.mask.value for p in plan.nodes.values())
    n_out = len(merger.graph.outputs)
    n_meas = len(merger.graph.nodes) - n_out
    return CostReport(len(sent), dict(sorted(counts.items())), n_out, n_meas + n_out)


def plan_report(plan: MaskingPlan, merger: MergerGraph) -> str:
    lines = [f"{'node':>5}  {'class':<18} {'rule':<8} {'theta':>5}  gen  notes"]
    for v in sorted(plan.nodes):
        p = plan.nodes[v]
        notes = ",".join(p.reasons + p.flags)
        theta = "-" if p.theta_levels == 1 else str(p.theta_levels)
        lines.append(
            f"{v:>5}  {p.mask.value:<18} {p.rule:<8} {theta:>5}  {'yes' if p.generator else 'no ':<3}  {notes}"
        )
    c = cost_report(plan, merger)
    lines.append("")
    lines.append(f"qubits_sent: {c.qubits_sent}")
    lines.append(f"outputs_returned: {c.outputs_returned}")
    lines.append(f"baseline_ubqc_cost: {c.baseline_ubqc_cost}")
    lines.append("breakdown: " + ", ".join(f"{k}={v}" for k, v in c.breakdown.items()))
    return "\n".join(lines)
