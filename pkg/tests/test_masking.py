import numpy as np
import pytest
from hypothesis import given, strategies as st

from sbqc import fixtures as F
from sbqc.masking import (
    MaskClass,
    classify_nodes,
    cost_report,
    future_cone,
    influence_sets,
    optimize_clifford_pi_difference,
    plan_report,
    qubit_masked_nodes,
    sabotage,
)
from sbqc.merge import swap_merger
from sbqc.pattern import PatternError, make_pattern
from sbqc.protocol import build_instance


@pytest.mark.parametrize("name", sorted(F.EXPECTED))
def test_expected_plans(name):
    inst = F.ALL[name]()
    classes, cost = F.EXPECTED[name]
    if classes is not None:
        assert {v: c.value for v, c in inst.plan.classes().items()} == classes
    assert cost_report(inst.plan, inst.merger).qubits_sent == cost


def test_future_cone_chain():
    p = F.chain([1, 2, 3, 4], {1: 0, 2: 0, 3: 0})
    fc = future_cone(p, 1)
    # g(1)={2} gives X on 2, Odd({2})={1,3} gives Z on 3; onwards to 4
    assert fc.cone == {2, 3, 4}
    assert fc.interior == {2, 3}
    assert fc.zdep == {3}
    p3 = F.chain([1, 2, 3], {1: 0, 2: 0})
    fc = future_cone(p3, 1)
    assert fc.cone == {2, 3} and fc.interior == {2}


def test_future_cone_errors():
    p = F.chain([1, 2, 3], {1: 0, 2: 0})
    with pytest.raises(PatternError):
        future_cone(p, 3)
    with pytest.raises(PatternError):
        future_cone(p, 9)


@given(st.integers(0, 2**32 - 1))
def test_cone_closed_and_monotone(seed):
    rng = np.random.default_rng(seed)
    p = F.random_pattern(rng, int(rng.integers(1, 7)))
    for v in p.graph.measured:
        fc = future_cone(p, v)
        assert v not in fc.cone
        assert fc.interior <= fc.cone and fc.zdep <= fc.cone
        for w in fc.cone & p.graph.measured:
            # cone of a member stays inside
            assert future_cone(p, w).cone <= fc.cone
            # and every member comes strictly later
            assert p.gflow.precedes(v, w)


def test_qubit_masked_examples():
    p = F.chain([1, 2, 3, 4], {1: 0, 2: 3, 3: 2})
    assert qubit_masked_nodes(p, future_cone(p, 1)) == {2}
    p = F.chain([1, 2, 3, 4], {1: 0, 2: 1, 3: 5})
    assert qubit_masked_nodes(p, future_cone(p, 1)) == {2, 3}


def test_influence_examples():
    inst = F.bridge_break()
    pats = inst.pats
    inf = influence_sets(inst.merger, pats, 2, inst.input_spec)
    assert 7 in inf.z[0] and 7 in inf.z[1]
    assert inf.r == (frozenset({7}), frozenset())
    # through the rung, 4 Z-corrects 2 in U0 only
    assert 4 in inf.z[0] and 4 not in inf.z[1]
    assert inf.differs() == {"r", "z"}
    inst = F.deleted_vertex()
    inf = influence_sets(inst.merger, inst.pats, 2, inst.input_spec)
    assert 4 in inf.z[1] and 4 not in inf.extra[0]


def test_identical_public_costs_nothing():
    p = F.chain([1, 2, 3, 4], {1: 1, 2: 3, 3: 6})
    inst = build_instance(p, p, F.identity_embedding(p, p, (1, 2, 3)), {1: "public"})
    assert cost_report(inst.plan, inst.merger).qubits_sent == 0
    assert not inst.plan.generators


def test_identical_private_costs_inputs():
    edges = [(1, 2), (2, 3), (4, 5), (5, 6)]
    p = make_pattern(range(1, 7), edges, (1, 4), (3, 6), {1: {2}, 2: {3}, 4: {5}, 5: {6}}, {1: 0, 2: 0, 4: 2, 5: 4})
    inst = build_instance(p, p, F.identity_embedding(p, p, (1, 4, 2, 5)), {1: "private", 4: "private"})
    assert cost_report(inst.plan, inst.merger).qubits_sent == 2


@pytest.mark.parametrize("name", sorted(F.ALL))
def test_swap_symmetry(name):
    inst = F.ALL[name]()
    m = swap_merger(inst.merger)
    plan = optimize_clifford_pi_difference(classify_nodes(inst.u1, inst.u0, m, inst.input_spec), inst.u1, inst.u0, m)
    assert plan.generators == inst.plan.generators
    assert cost_report(plan, m).qubits_sent == cost_report(inst.plan, inst.merger).qubits_sent


@pytest.mark.parametrize("name", sorted(F.ALL))
def test_pad_rules_carry_pads(name):
    plan = F.ALL[name]().plan
    for v, p in plan.nodes.items():
        if p.rule == "i":
            assert p.theta_levels in (4, 8)
        if p.mask in (MaskClass.CLASSICAL_PI, MaskClass.NO_MASK):
            assert p.theta_levels == 1


@given(st.integers(0, 2**32 - 1))
def test_single_target_quantum_set(seed):
    rng = np.random.default_rng(seed)
    u0 = F.random_pattern(rng, int(rng.integers(1, 6)))
    measured = sorted(u0.graph.measured - set(u0.graph.inputs))
    if not measured:
        return
    t = int(rng.choice(measured))
    angles = dict(u0.angles)
    angles[t] = (angles[t] + int(rng.integers(1, 8))) % 8
    u1 = type(u0)(u0.graph, u0.gflow, angles)
    m = F.identity_embedding(u0, u1, u0.measurement_order())
    spec = {v: "public" for v in u0.graph.inputs}
    plan = classify_nodes(u0, u1, m, spec)
    assert plan.generators == {t}
    assert plan[t].mask is MaskClass.QUARTER_PI
    assert plan.quantum_masked() == {t} | qubit_masked_nodes(u0, future_cone(u0, t))


def test_clifford_downgrade():
    for a0, a1, expect in [(0, 4, True), (2, 6, True), (1, 5, False), (0, 2, False), (3, 7, False)]:
        u0 = F.chain([1, 2, 3, 4], {1: 0, 2: a0, 3: 0})
        u1 = F.chain([1, 2, 3, 4], {1: 0, 2: a1, 3: 0})
        inst = build_instance(u0, u1, F.identity_embedding(u0, u1, (1, 2, 3)), {1: "public"})
        assert (inst.plan[2].mask is MaskClass.CLASSICAL_PI) == expect
        raw = build_instance(u0, u1, F.identity_embedding(u0, u1, (1, 2, 3)), {1: "public"}, optimize=False)
        assert raw.plan[2].mask is MaskClass.QUARTER_PI


def test_sabotage_and_report():
    inst = F.angle_difference()
    plan = sabotage(inst.plan, 2)
    assert plan[2].mask is MaskClass.NO_MASK and "sabotaged" in plan[2].flags
    text = plan_report(inst.plan, inst.merger)
    assert "qubits_sent: 2" in text
    assert "QuantumQuarterPi" in text
