"""End-to-end acceptance checks, one test per criterion.

Each test prints a line "criterion N: PASS|FAIL ..." and the lines are
repeated in the terminal summary.
"""

import itertools
import time
from fractions import Fraction

import numpy as np

from sbqc import fixtures as F
from sbqc import nogo
from sbqc.blindness import blindness_test, sabotaged
from sbqc.masking import MaskClass, cost_report, future_cone, qubit_masked_nodes
from sbqc.merge import CycleError, union_order_closure
from sbqc.pattern import verify_gflow
from sbqc.protocol import bridge_break_unit, build_instance, sbqc_run, ubqc_run
from sbqc.statevec import (
    BranchError,
    Computational,
    OutcomeSource,
    PlusTheta,
    StateVector,
    apply_cz,
    fidelity,
    prepare,
    run_pattern,
)

TOL = 1e-9


def test_criterion_1_determinism(criterion):
    with criterion(1, "all forced branches agree") as info:
        t0 = time.perf_counter()
        rng = np.random.default_rng(1)
        worst, n_pat, n_br = 1.0, 0, 0
        for _ in range(24):
            p = F.random_pattern(rng, int(rng.integers(1, 7)), n_outputs=int(rng.integers(1, 4)))
            assert verify_gflow(p).ok
            inp = F.random_state(rng, p.graph.inputs)
            k = len(p.graph.measured)
            outs = []
            for bits in itertools.product((0, 1), repeat=k):
                try:
                    outs.append(run_pattern(p, inp, OutcomeSource.branch(bits))[0])
                except BranchError:
                    continue  # probability-zero branch
            assert outs
            for a, b in itertools.combinations(outs, 2):
                worst = min(worst, fidelity(a, b))
            n_pat += 1
            n_br += len(outs)
        elapsed = time.perf_counter() - t0
        info["detail"] = f"{n_pat} patterns, {n_br} branches, min fidelity {worst:.12f}"
        assert worst >= 1 - TOL
        assert elapsed <= 60


def test_criterion_2_ubqc(criterion):
    with criterion(2, "UBQC matches direct execution") as info:
        rng = np.random.default_rng(2)
        worst, n = 1.0, 0
        for _ in range(24):
            m = int(rng.integers(1, 8))
            p = F.random_pattern(rng, m, n_outputs=int(rng.integers(1, min(3, 10 - m) + 1)), n_inputs=int(rng.integers(0, 3)))
            assert len(p.nodes) <= 10
            inp = F.random_state(rng, p.graph.inputs) if p.graph.inputs else None
            ref, _ = run_pattern(p, inp, OutcomeSource.seeded(0))
            for seed in range(10):
                out, _, _, _ = ubqc_run(p, inp, seed=seed)
                worst = min(worst, fidelity(ref, out))
            n += 1
        info["detail"] = f"{n} patterns x 10 seeds, min fidelity {worst:.12f}"
        assert worst >= 1 - TOL


def test_criterion_3_sbqc(criterion):
    with criterion(3, "SBQC outputs match U_i on the fixture suite") as info:
        t0 = time.perf_counter()
        classes = set()
        worst = 1.0
        for name, build in F.SUITE.items():
            inst = build()
            classes |= set(inst.plan.classes().values())
            for i in (0, 1):
                inp = inst.inputs[i]
                ref, _ = run_pattern(inst.pattern(i), inp, OutcomeSource.seeded(0))
                for seed in range(10):
                    out, _, _, _ = sbqc_run(inst, i, seed=seed)
                    worst = min(worst, fidelity(ref, out))
        elapsed = time.perf_counter() - t0
        missing = set(MaskClass) - classes
        info["detail"] = f"{len(F.SUITE)} fixtures x 2 choices x 10 seeds, min fidelity {worst:.12f}"
        assert not missing, f"mask classes not covered: {sorted(m.value for m in missing)}"
        assert worst >= 1 - TOL
        assert elapsed <= 300


def test_criterion_4_blindness(criterion):
    with criterion(4, "blindness at N=10^4, sabotage detected") as info:
        t0 = time.perf_counter()
        results = []
        for name, build in F.SUITE.items():
            inst = build()
            honest = blindness_test(inst, 10_000, seed=0)
            bad = blindness_test(sabotaged(inst, F.SABOTAGE_TARGET[name]), 10_000, seed=0)
            results.append((name, honest, bad))
        elapsed = time.perf_counter() - t0
        parts = [
            f"{n} {'ok' if h.pass_ else 'LEAK'} tv={h.tv_estimate:.3f}/{h.threshold:.3f} "
            f"sabotage {'caught' if not b.pass_ else 'MISSED'}"
            for n, h, b in results
        ]
        info["detail"] = "; ".join(parts)
        for n, h, b in results:
            assert h.pass_, f"{n}:\n{h.report()}"
            assert not b.pass_, f"{n} sabotage passed:\n{b.report()}"
        assert elapsed <= 600


def test_criterion_5_bridge_break(criterion):
    with criterion(5, "bridge gives CZ(r1 x r2), break gives r1 x r2") as info:
        rng = np.random.default_rng(5)
        worst, cases = 1.0, 0
        preps = [("bridge", 0, PlusTheta(0)), ("bridge", 1, PlusTheta(4)), ("break", 0, Computational(0)), ("break", 1, Computational(1))]
        for _ in range(50):
            r1, r2 = F.random_state(rng, [1]), F.random_state(rng, [2])
            prod = StateVector.product({1: r1.vector(), 2: r2.vector()})
            for mode, c, kind in preps:
                want = apply_cz(prod, 1, 2) if mode == "bridge" else prod
                st = apply_cz(apply_cz(prepare(prod, 0, kind), 0, 1), 0, 2)
                for t in (0, 1):
                    out = bridge_break_unit(st, 0, (1, 2), mode, c, OutcomeSource.branch([t]))
                    worst = min(worst, fidelity(want, out))
                    cases += 1
        info["detail"] = f"{cases} cases, min fidelity {worst:.12f}"
        assert worst >= 1 - TOL


def _random_order(rng, nodes, p):
    perm = list(rng.permutation(nodes))
    return {(int(perm[i]), int(perm[j])) for i in range(len(perm)) for j in range(i + 1, len(perm)) if rng.random() < p}


def _brute_force(pairs, nodes):
    pairs = list(pairs)
    for perm in itertools.permutations(nodes):
        pos = {v: k for k, v in enumerate(perm)}
        if all(pos[a] < pos[b] for a, b in pairs):
            return True
    return False


def test_criterion_6_merger(criterion):
    with criterion(6, "union order closure vs brute force") as info:
        rng = np.random.default_rng(6)
        agree, compatible = 0, 0
        for _ in range(200):
            n = int(rng.integers(2, 9))
            nodes = list(range(n))
            p = float(rng.choice([0.1, 0.2, 0.35]))
            o0, o1 = _random_order(rng, nodes, p), _random_order(rng, nodes, p)
            ident = {v: v for v in nodes}
            try:
                union_order_closure(o0, o1, ident, ident)
                verdict = True
            except CycleError:
                verdict = False
            truth = _brute_force(o0 | o1, nodes)
            compatible += truth
            agree += verdict == truth
        info["detail"] = f"{agree}/200 agree ({compatible} compatible, {200 - compatible} not)"
        assert agree == 200


def test_criterion_7_angle_tables(criterion):
    with criterion(7, "single-target angle tables and Clifford downgrade") as info:
        # chain 0-1-2-3, public input 0, target 1, member 2 takes only an X-correction from 1
        member_expect = {0: MaskClass.NO_MASK, 4: MaskClass.NO_MASK, 2: MaskClass.CLASSICAL_PI, 6: MaskClass.CLASSICAL_PI}
        downgraded = set()
        checked = 0
        for a0, a1, m in itertools.product(range(8), range(8), range(8)):
            u0 = F.chain([0, 1, 2, 3], {0: 3, 1: a0, 2: m})
            u1 = F.chain([0, 1, 2, 3], {0: 3, 1: a1, 2: m})
            merger = F.identity_embedding(u0, u1, (0, 1, 2))
            raw = build_instance(u0, u1, merger, {0: "public"}, optimize=False).plan
            opt = build_instance(u0, u1, merger, {0: "public"}).plan
            if a0 == a1:
                assert not raw.generators and all(c is not MaskClass.QUARTER_PI for c in raw.classes().values())
                assert raw[2].mask is MaskClass.NO_MASK
            else:
                assert raw[1].mask is MaskClass.QUARTER_PI
                assert raw[2].mask is member_expect.get(m, MaskClass.HALF_PI), (a0, a1, m)
                if opt[1].mask is MaskClass.CLASSICAL_PI:
                    downgraded.add((a0, a1))
                else:
                    assert opt[1].mask is MaskClass.QUARTER_PI
            checked += 1
        want = {(a0, a1) for a0 in range(0, 8, 2) for a1 in range(0, 8, 2) if (a0 - a1) % 8 == 4}
        info["detail"] = f"{checked} instances, downgraded pairs {sorted(downgraded)}"
        assert downgraded == want


# hand-counted qubit-masked cone members, fixed before running the planner
HAND_COUNTS = {
    "angle_difference": (2, {3}),  # target 2; interior {3}, 3 is odd
    "input_target": (1, {2, 3, 7}),  # target 1; interior {2, 3, 7}, all odd
    "private_input": (1, set()),  # input 1; dependent 2 has angle 0
    "private_input_odd": (1, {2}),  # dependent 2 has angle 3pi/4
}


def test_criterion_8_costs(criterion):
    with criterion(8, "cost formulas on hand-counted fixtures") as info:
        parts = []
        for name, (src, masked) in HAND_COUNTS.items():
            inst = F.ALL[name]()
            p0 = inst.pats[0]
            assert qubit_masked_nodes(p0, future_cone(p0, src)) == masked
            cost = cost_report(inst.plan, inst.merger).qubits_sent
            # one qubit for the target (or the single private input) plus one per masked dependent
            assert cost == 1 + len(masked), (name, cost)
            parts.append(f"{name}={cost}")
        info["detail"] = ", ".join(parts)


def test_criterion_9_nogo_scan(criterion):
    with criterion(9, "separability zero set and image rank") as info:
        t0 = time.perf_counter()
        res = nogo.separability_scan(64)
        rank = nogo.image_rank(64)
        elapsed = time.perf_counter() - t0
        info["detail"] = f"{int(res.zero_mask().sum())} zeros, rank {rank}, {elapsed:.2f}s"
        assert res.agrees()
        assert rank <= 3
        assert elapsed <= 10


def test_criterion_10_correlated_keys(criterion):
    with criterion(10, "correlated-key attack") as info:
        accs = [nogo.correlated_key_attack("identity", pi, pj).accuracy for pi in range(8) for pj in range(8)]
        mi = nogo.correlated_key_attack("independent").mi_bits
        info["detail"] = f"identity accuracy min {min(accs)}, independent MI {mi}"
        assert min(accs) == 1.0
        assert mi == 0.0


def test_criterion_11_lower_bound(criterion):
    with criterion(11, "guessing bound and min_m growth") as info:
        for m in range(0, 25):
            assert nogo.guess_probability(8, m) == Fraction(1, 8**m)
        ks = range(8, 21)
        ratios = [nogo.min_m(2**k, 2) / k for k in ks]
        mean = sum(ratios) / len(ratios)
        dev = max(abs(r / mean - 1) for r in ratios)
        info["detail"] = f"min_m/log2 n in [{min(ratios):.3f}, {max(ratios):.3f}], max deviation {dev:.1%} from mean {mean:.3f}"
        assert dev <= 0.10
