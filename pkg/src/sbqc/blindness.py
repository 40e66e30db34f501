"""Empirical check that the server's classical view does not depend on the choice bit.

A transcript is the sequence of (delta, outcome) pairs the server sees, in
measurement order. Prep tags and the output list are fixed by the plan and
identical in both branches, so they are left out of the key.

Threshold heuristic: for two independent N-sample empirical distributions of
one law with support S, the expected TV distance is about 0.4 * sqrt(S / N)
and its spread is much smaller, so 4 * sqrt(S / N) is a generous cut that a
real difference of order one still crosses once N >= 16 S. When the joint
support is too large for that, every single-node marginal and every
node pair is compared instead, each with its own threshold.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chisquare

from .masking import MaskClass, sabotage
from .protocol import ProtocolInstance, sbqc_run

Key = tuple  # ((node, delta, outcome), ...)

CHI_ALPHA = 1e-3


@dataclass
class TranscriptDistribution:
    counts: Counter
    n: int

    def freq(self, key) -> float:
        return self.counts.get(key, 0) / self.n

    @property
    def support(self) -> int:
        return len(self.counts)

    def project(self, positions: tuple[int, ...]) -> "TranscriptDistribution":
        out: Counter = Counter()
        for key, c in self.counts.items():
            out[tuple(key[p] for p in positions)] += c
        return TranscriptDistribution(out, self.n)

    def deltas(self, position: int) -> Counter:
        out: Counter = Counter()
        for key, c in self.counts.items():
            out[key[position][1]] += c
        return out


def transcript_key(transcript) -> Key:
    ang = []
    msgs = transcript.messages
    for k, m in enumerate(msgs):
        if m.kind == "measure":
            t = msgs[k + 1].value
            ang.append((m.node, m.value, t))
    return tuple(ang)


def run_seeds(seed: int, i: int, n: int) -> list[int]:
    ss = np.random.SeedSequence([seed, i])
    return [int(x) for x in ss.generate_state(n, np.uint64)]


def collect(instance: ProtocolInstance, i: int, n: int, seed: int = 0) -> TranscriptDistribution:
    """n honest runs with choice i; deterministic in (instance, i, n, seed)."""
    if n < 1:
        raise ValueError("need at least one run")
    counts: Counter = Counter()
    for s in run_seeds(seed, i, n):
        _, _, tr, _ = sbqc_run(instance, i, seed=s)
        counts[transcript_key(tr)] += 1
    return TranscriptDistribution(counts, n)


def tv_distance(p: TranscriptDistribution, q: TranscriptDistribution) -> float:
    keys = set(p.counts) | set(q.counts)
    return 0.5 * sum(abs(p.freq(k) - q.freq(k)) for k in keys)


def threshold(support: int, n: int) -> float:
    return 4.0 * np.sqrt(support / n)


@dataclass
class ChiRow:
    node: int
    mask: str
    cells: int
    stat: float
    p_value: float

    @property
    def ok(self) -> bool:
        return self.p_value > CHI_ALPHA


@dataclass
class BlindnessVerdict:
    tv_estimate: float
    threshold: float
    chi: list[ChiRow]
    mode: str  # which comparison produced the worst statistic
    worst_nodes: tuple[int, ...] = ()
    notes: list[str] = field(default_factory=list)

    @property
    def pass_(self) -> bool:
        return self.tv_estimate <= self.threshold and all(r.ok for r in self.chi)

    def report(self) -> str:
        lines = [
            f"mode: {self.mode}",
            f"tv_estimate: {self.tv_estimate:.4f}",
            f"threshold: {self.threshold:.4f}",
        ]
        if self.worst_nodes:
            lines.append("worst: " + ",".join(map(str, self.worst_nodes)))
        lines.append(f"{'node':>5}  {'class':<18} {'cells':>5} {'chi2':>9} {'p':>9}")
        for r in self.chi:
            lines.append(f"{r.node:>5}  {r.mask:<18} {r.cells:>5} {r.stat:>9.3f} {r.p_value:>9.4f}")
        lines += [f"note: {n}" for n in self.notes]
        lines.append("verdict: " + ("PASS" if self.pass_ else "FAIL"))
        return "\n".join(lines)


# which delta cosets a pad should make uniform: (group modulus, cells per group)
_PAD_SHAPE = {8: (1, 8), 4: (2, 4)}


def _chi_row(node: int, mask: str, levels: int, counts: Counter) -> ChiRow | None:
    if levels in _PAD_SHAPE:
        mod, size = _PAD_SHAPE[levels]
        step = mod
    elif mask == MaskClass.CLASSICAL_PI.value or mask == MaskClass.PUBLIC.value:
        mod, size, step = 4, 2, 4
    else:
        return None
    obs, exp = [], []
    for base in range(mod):
        cells = [counts.get(base + step * k, 0) for k in range(size)]
        tot = sum(cells)
        if tot == 0:
            continue
        obs += cells
        exp += [tot / size] * size
    groups = len(obs) // size
    if groups == 0:
        return None
    res = chisquare(obs, exp, ddof=groups - 1)
    return ChiRow(node, mask, len(obs), float(res.statistic), float(res.pvalue))


def node_chi_table(instance: ProtocolInstance, dists: tuple[TranscriptDistribution, ...]) -> list[ChiRow]:
    """Uniformity of each masked node's delta over the coset its pad spans."""
    rows = []
    first = next(iter(dists[0].counts))
    positions = {node: k for k, (node, _, _) in enumerate(first)}
    for v in sorted(positions):
        np_ = instance.plan[v]
        if np_.rule not in ("i", "ii"):
            continue
        total: Counter = Counter()
        for d in dists:
            total.update(d.deltas(positions[v]))
        row = _chi_row(v, np_.mask.value, np_.theta_levels, total)
        if row is not None:
            rows.append(row)
    return rows


def compare(p: TranscriptDistribution, q: TranscriptDistribution) -> tuple[float, float, str, tuple[int, ...], list[str]]:
    """Worst TV statistic relative to its threshold.

    The joint law is compared when N >= 16 S; every node marginal and every
    node pair is compared always, since a loose joint cut can hide them.
    """
    n = min(p.n, q.n)
    support = len(set(p.counts) | set(q.counts))
    first = next(iter(p.counts))
    nodes = tuple(node for node, _, _ in first)
    notes = []
    candidates = []
    if 16 * support <= n:
        candidates.append((tv_distance(p, q), threshold(support, n), "joint", nodes))
    else:
        notes.append(f"joint support {support} too large for N={n}; pairwise only")
    positions = list(range(len(nodes)))
    for pos in [(k,) for k in positions] + list(itertools.combinations(positions, 2)):
        pp, qq = p.project(pos), q.project(pos)
        s = len(set(pp.counts) | set(qq.counts))
        thr = threshold(s, n)
        if thr >= 1:
            notes.append(f"N too small for nodes {[nodes[k] for k in pos]} (support {s})")
        candidates.append((tv_distance(pp, qq), thr, "pairwise", tuple(nodes[k] for k in pos)))
    tv, thr, mode, worst = max(candidates, key=lambda c: c[0] - c[1])
    return tv, thr, mode, worst, notes


def blindness_test(instance: ProtocolInstance, n: int, seed: int = 0) -> BlindnessVerdict:
    d0 = collect(instance, 0, n, seed)
    d1 = collect(instance, 1, n, seed)
    if [x[0] for x in next(iter(d0.counts))] != [x[0] for x in next(iter(d1.counts))]:
        return BlindnessVerdict(1.0, 0.0, [], "schema", (), ["measurement order differs between choices"])
    tv, thr, mode, worst, notes = compare(d0, d1)
    chi = node_chi_table(instance, (d0, d1))
    return BlindnessVerdict(tv, thr, chi, mode, worst, notes)


def sabotaged(instance: ProtocolInstance, node: int) -> ProtocolInstance:
    return instance.with_plan(sabotage(instance.plan, node))


def null_pass_rate(support: int, n: int, trials: int, seed: int = 0) -> float:
    """Fraction of same-law sample pairs that pass the TV cut.

    Each trial draws a random law on `support` points from a flat Dirichlet,
    then two independent n-samples from it.
    """
    rng = np.random.default_rng(seed)
    ok = 0
    for _ in range(trials):
        law = rng.dirichlet(np.ones(support))
        a = rng.multinomial(n, law)
        b = rng.multinomial(n, law)
        s = int(np.count_nonzero(a + b))
        tv = 0.5 * np.abs(a - b).sum() / n
        ok += tv <= threshold(s, n)
    return ok / trials
