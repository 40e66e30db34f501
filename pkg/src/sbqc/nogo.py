"""Numerics for why a server-side state expander cannot exist.

Three pieces: a separability scan of the canonical two-output isometry,
a differential attack on correlated one-time pad keys, and the counting
bound on guessing the padding keys.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np

from .statevec import StateVector

ZERO_TOL = 1e-10

# Hadamard-basis columns expressed in the computational basis
_HH = np.kron(np.array([[1, 1], [1, -1]]) / np.sqrt(2), np.array([[1, 1], [1, -1]]) / np.sqrt(2))


def isometry_matrix(delta: float) -> np.ndarray:
    """D2 as a 4x2 matrix acting on (|+>, |->), output in the Hadamard basis."""
    return np.array([[1, 0], [0, 0], [0, np.cos(delta)], [0, np.sin(delta)]], dtype=complex)


def isometry_output(delta: float, theta: float, basis: str = "hadamard") -> StateVector:
    """D2 |+_theta> as a two-qubit state (labels 0, 1)."""
    e = np.exp(1j * theta)
    vec = 0.5 * np.array([1 + e, 0, np.cos(delta) * (1 - e), np.sin(delta) * (1 - e)])
    vec = vec / np.linalg.norm(vec)
    if basis == "computational":
        vec = _HH @ vec
    return StateVector.from_vector(vec, [0, 1])


def product_deviation(state: StateVector) -> float:
    """1 - largest squared Schmidt coefficient; 0 iff the state is a product."""
    if state.n != 2:
        raise ValueError(f"need a two-qubit state, got {state.n} qubits")
    m = state.vector().reshape(2, 2)
    s = np.linalg.svd(m, compute_uv=False)
    lam = s[0] ** 2 / float(np.sum(s**2))
    return max(0.0, 1.0 - lam)


def deviation_from_det(state: StateVector) -> float:
    """Closed form (1 - sqrt(1 - 4|det M|^2)) / 2, independent of the SVD route."""
    v = state.vector() / np.linalg.norm(state.vector())
    det = v[0] * v[3] - v[1] * v[2]
    return float((1 - np.sqrt(max(0.0, 1 - 4 * abs(det) ** 2))) / 2)


def separability_factor(theta: float, delta: float) -> complex:
    return (1 + np.exp(1j * theta)) * (1 - np.exp(1j * theta)) * np.sin(delta)


@dataclass
class ScanResult:
    thetas: np.ndarray
    deltas: np.ndarray
    deviation: np.ndarray  # [theta index, delta index]

    def zero_mask(self, tol: float = ZERO_TOL) -> np.ndarray:
        return self.deviation <= tol

    def analytic_zero_mask(self, tol: float = ZERO_TOL) -> np.ndarray:
        f = np.array([[abs(separability_factor(t, d)) for d in self.deltas] for t in self.thetas])
        return f <= tol

    def agrees(self) -> bool:
        return bool(np.array_equal(self.zero_mask(), self.analytic_zero_mask()))

    def to_csv(self) -> str:
        lines = ["theta,delta,deviation"]
        for a, t in enumerate(self.thetas):
            for b, d in enumerate(self.deltas):
                lines.append(f"{t:.12g},{d:.12g},{self.deviation[a, b]:.12g}")
        return "\n".join(lines) + "\n"


def grid(resolution: int) -> np.ndarray:
    return 2 * np.pi * np.arange(resolution) / resolution


def separability_scan(resolution: int = 64) -> ScanResult:
    """product_deviation of D2|+_theta> on a resolution x resolution grid over [0, 2pi)^2."""
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    ts = grid(resolution)
    ds = grid(resolution)
    dev = np.array([[product_deviation(isometry_output(d, t)) for d in ds] for t in ts])
    return ScanResult(ts, ds, dev)


def image_rank(resolution: int = 64, tol: float = 1e-10) -> int:
    """Numerical rank of the span of all grid outputs."""
    vecs = [isometry_output(d, t).vector() for t in grid(resolution) for d in grid(resolution)]
    s = np.linalg.svd(np.array(vecs), compute_uv=False)
    return int(np.sum(s > tol * s[0]))


def random_isometry(rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    q, _ = np.linalg.qr(a)
    return q


def isometry_scan(samples: int, resolution: int = 16, seed: int = 0) -> np.ndarray:
    """For random 4x2 isometries V, the largest deviation of V|+_theta> over a theta grid.

    Generic isometries entangle some |+_theta>, so every entry should be
    positive; only the measure-zero family covered by the canonical form can
    keep all outputs separable.
    """
    rng = np.random.default_rng(seed)
    out = np.empty(samples)
    for k in range(samples):
        v = random_isometry(rng)
        worst = 0.0
        for t in grid(resolution):
            vec = v @ np.array([1, np.exp(1j * t)]) / np.sqrt(2)
            worst = max(worst, product_deviation(StateVector.from_vector(vec, [0, 1])))
        out[k] = worst
    return out


# correlated keys ------------------------------------------------------------

KeyMap = Callable[[int], int]

KEY_MAPS: dict[str, KeyMap | None] = {
    "identity": lambda t: t,
    "negate": lambda t: (-t) % 8,
    "shift1": lambda t: (t + 1) % 8,
    "double": lambda t: (2 * t) % 8,
    "constant": lambda t: 0,
    "independent": None,
}


def joint_law(f: KeyMap | None, phi_i: int, phi_j: int) -> dict[tuple[int, int], Fraction]:
    """Exact law of (delta_i, delta_j) over uniform theta_i, r_i, r_j (and theta_j if independent)."""
    law: dict[tuple[int, int], Fraction] = defaultdict(Fraction)
    thetas_j = range(8) if f is None else (None,)
    cases = list(itertools.product(range(8), thetas_j, (0, 1), (0, 1)))
    w = Fraction(1, len(cases))
    for ti, tj, ri, rj in cases:
        tj = f(ti) if f is not None else tj
        di = (phi_i + ti + 4 * ri) % 8
        dj = (phi_j + tj + 4 * rj) % 8
        law[(di, dj)] += w
    return dict(law)


def mutual_information(joint: Mapping[tuple, Fraction]) -> float:
    """I(X;Y) in bits for an exact joint law on (x, y) pairs; exactly 0.0 under independence."""
    px: dict = defaultdict(Fraction)
    py: dict = defaultdict(Fraction)
    for (x, y), p in joint.items():
        px[x] += p
        py[y] += p
    mi = 0.0
    for (x, y), p in joint.items():
        if p == 0:
            continue
        ratio = p / (px[x] * py[y])
        if ratio != 1:
            mi += float(p) * math.log2(ratio)
    return mi


def plugin_mutual_information(pairs) -> float:
    counts = Counter(pairs)
    n = sum(counts.values())
    joint = {k: Fraction(c, n) for k, c in counts.items()}
    return mutual_information(joint)


@dataclass
class AttackReport:
    f: str
    phi_i: int
    phi_j: int
    invariant: frozenset[int]  # observed (delta_j - delta_i) - (phi_j - phi_i)
    accuracy: float
    mi_bits: float
    relation: dict[int, frozenset[int]] = field(default_factory=dict)  # D mod 4 -> observed delta_j - delta_i

    def report(self) -> str:
        lines = [
            f"f: {self.f}",
            f"phi_i: {self.phi_i}  phi_j: {self.phi_j}",
            "invariant (delta_j - delta_i) - (phi_j - phi_i): " + ",".join(map(str, sorted(self.invariant))),
            f"accuracy of (phi_j - phi_i) mod 4 from (delta_j - delta_i) mod 4: {self.accuracy:.4f}",
            f"mutual information with (phi_j - phi_i) mod 4: {self.mi_bits:.6f} bits",
            "relation:",
        ]
        for d, obs in sorted(self.relation.items()):
            lines.append(f"  {d} -> " + ",".join(map(str, sorted(obs))))
        return "\n".join(lines)


def correlated_key_attack(
    f: str | KeyMap | None = "identity",
    phi_i: int = 0,
    phi_j: int = 1,
    samples: int | None = None,
    seed: int = 0,
) -> AttackReport:
    """Server-side differential attack on delta_i, delta_j when theta_j = f(theta_i).

    With samples=None everything is enumerated exactly; otherwise the
    quantities are plug-in estimates from that many draws. The mutual
    information is taken with phi_j - phi_i uniform over all 8 octants.
    """
    name = f if isinstance(f, str) else getattr(f, "__name__", "custom")
    fn = KEY_MAPS[f] if isinstance(f, str) else f
    if samples is None:
        laws = {d: joint_law(fn, phi_i, (phi_i + d) % 8) for d in range(8)}
    else:
        rng = np.random.default_rng(seed)
        laws = {}
        for d in range(8):
            ti = rng.integers(8, size=samples)
            tj = rng.integers(8, size=samples) if fn is None else np.array([fn(int(t)) for t in ti])
            ri = rng.integers(2, size=samples)
            rj = rng.integers(2, size=samples)
            di = (phi_i + ti + 4 * ri) % 8
            dj = (phi_i + d + tj + 4 * rj) % 8
            c = Counter(zip(di.tolist(), dj.tolist()))
            laws[d] = {k: Fraction(v, samples) for k, v in c.items()}

    target = (phi_j - phi_i) % 8
    inv = frozenset(((dj - di) - target) % 8 for di, dj in laws[target])

    # joint of (D mod 4, transcript) under a uniform D
    joint: dict = defaultdict(Fraction)
    relation: dict[int, set[int]] = defaultdict(set)
    for d, law in laws.items():
        for (di, dj), p in law.items():
            joint[(d % 4, (di, dj))] += p / 8
            relation[d % 4].add((dj - di) % 8)
    mi = mutual_information(joint)

    # guess D mod 4 as (delta_j - delta_i) mod 4, scored against the law
    correct = Fraction(0)
    for (dm, (di, dj)), p in joint.items():
        if (dj - di) % 4 == dm:
            correct += p
    return AttackReport(
        name, phi_i, phi_j, inv, float(correct), mi, {k: frozenset(v) for k, v in relation.items()}
    )


# counting bound ---------------------------------------------------------------


def guess_probability(theta_set_size: int, m: int) -> Fraction:
    """Chance of guessing m independent uniform keys from a set of the given size."""
    if theta_set_size < 2 or m < 0:
        raise ValueError("need theta_set_size >= 2 and m >= 0")
    return Fraction(1, theta_set_size**m)


def min_m(n: int, c: float, theta_set_size: int = 8) -> int:
    """Smallest m with |Theta|^-m <= n^-c."""
    if n < 2 or c <= 0:
        raise ValueError("need n >= 2 and c > 0")
    if float(c).is_integer():
        # exact integer comparison |Theta|^m >= n^c
        target = n ** int(c)
        m = 0
        while theta_set_size**m < target:
            m += 1
        return m
    return math.ceil(c * math.log(n) / math.log(theta_set_size) - 1e-12)
