"""Dense state-vector simulator for graph states and XY-plane measurements.

The register is a tensor of shape (2,)*n; axis k holds qubit ``labels[k]``.
Measured qubits are projected and removed from the register.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .pattern import MeasurementPattern, OpenGraph, corrected_angle, odd_neighbourhood

MAX_QUBITS = 14
NORM_TOL = 1e-9
BRANCH_TOL = 1e-12

SQRT2 = np.sqrt(2.0)
H = np.array([[1, 1], [1, -1]], dtype=complex) / SQRT2
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


class SimulationError(RuntimeError):
    pass


class BranchError(SimulationError):
    """A forced outcome had (numerically) zero probability."""


def phase(k: float) -> complex:
    """e^{i k pi/4}; k may be fractional when called from the no-go lab."""
    return np.exp(1j * np.pi * k / 4)


def zrot(k: float) -> np.ndarray:
    """Z(k*pi/4) = diag(1, e^{i k pi/4})."""
    return np.array([[1, 0], [0, phase(k)]], dtype=complex)


def plus_state(k: float) -> np.ndarray:
    return np.array([1, phase(k)], dtype=complex) / SQRT2


# preparation kinds ---------------------------------------------------------


@dataclass(frozen=True)
class PlusTheta:
    k: int


@dataclass(frozen=True)
class Computational:
    bit: int


@dataclass(frozen=True)
class EncryptedInput:
    """Z(theta) X^a applied to a single-qubit base state."""

    base: tuple[complex, complex]
    a: int
    k: int


def kind_vector(kind) -> np.ndarray:
    if isinstance(kind, PlusTheta):
        return plus_state(kind.k)
    if isinstance(kind, Computational):
        v = np.zeros(2, dtype=complex)
        v[kind.bit & 1] = 1
        return v
    if isinstance(kind, EncryptedInput):
        v = np.asarray(kind.base, dtype=complex)
        v = v / np.linalg.norm(v)
        if kind.a:
            v = X @ v
        return zrot(kind.k) @ v
    raise TypeError(f"unknown preparation kind {kind!r}")


# register -------------------------------------------------------------------


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    labels: tuple[int, ...]

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        labels = tuple(self.labels)
        n = len(labels)
        if len(set(labels)) != n:
            raise SimulationError(f"duplicate qubit labels {labels}")
        if amps.size != 2**n:
            raise SimulationError(f"{amps.size} amplitudes for {n} qubits")
        object.__setattr__(self, "amplitudes", amps.reshape((2,) * n))
        object.__setattr__(self, "labels", labels)

    @classmethod
    def empty(cls) -> "StateVector":
        return cls(np.ones(1, dtype=complex), ())

    @classmethod
    def from_vector(cls, vec: Sequence[complex], labels: Sequence[int]) -> "StateVector":
        """Build from a flat vector (normalised), first label is the most significant bit."""
        v = np.asarray(vec, dtype=complex)
        nrm = np.linalg.norm(v)
        if nrm < 1e-300:
            raise SimulationError("zero vector")
        return cls(v / nrm, tuple(labels))

    @classmethod
    def product(cls, qubits: Mapping[int, Sequence[complex]]) -> "StateVector":
        st = cls.empty()
        for lab in sorted(qubits):
            v = np.asarray(qubits[lab], dtype=complex)
            st = _append(st, lab, v / np.linalg.norm(v))
        return st

    @property
    def n(self) -> int:
        return len(self.labels)

    def vector(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def axis(self, label: int) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise SimulationError(f"unknown qubit label {label}") from None

    def reordered(self, labels: Sequence[int]) -> "StateVector":
        labels = tuple(labels)
        if sorted(labels) != sorted(self.labels):
            raise SimulationError(f"label mismatch {labels} vs {self.labels}")
        perm = [self.labels.index(l) for l in labels]
        return StateVector(np.transpose(self.amplitudes, perm), labels)

    def relabel(self, mapping: Mapping[int, int]) -> "StateVector":
        return StateVector(self.amplitudes, tuple(mapping.get(l, l) for l in self.labels))

    def dump(self) -> str:
        """Label-ordered amplitude listing with 12 significant digits."""
        lines = ["labels: " + " ".join(str(l) for l in self.labels)]
        n = self.n
        for idx, a in enumerate(self.vector()):
            bits = format(idx, f"0{n}b") if n else ""
            lines.append(f"{bits or '-'} {a.real:.12g} {a.imag:.12g}")
        return "\n".join(lines)


def _append(state: StateVector, label: int, vec: np.ndarray, max_qubits: int = MAX_QUBITS) -> StateVector:
    if label in state.labels:
        raise SimulationError(f"qubit {label} already present")
    if state.n + 1 > max_qubits:
        raise SimulationError(f"register would exceed {max_qubits} qubits")
    amps = np.multiply.outer(state.amplitudes, vec)
    return StateVector(amps, state.labels + (label,))


def prepare(state: StateVector, label: int, kind, max_qubits: int = MAX_QUBITS) -> StateVector:
    """Append one qubit in the requested single-qubit state."""
    return _append(state, label, kind_vector(kind), max_qubits)


def apply_single(state: StateVector, label: int, gate: np.ndarray) -> StateVector:
    ax = state.axis(label)
    amps = np.tensordot(gate, state.amplitudes, axes=([1], [ax]))
    amps = np.moveaxis(amps, 0, ax)
    return StateVector(amps, state.labels)


def apply_cz(state: StateVector, i: int, j: int) -> StateVector:
    if i == j:
        raise SimulationError("CZ needs two distinct qubits")
    ai, aj = state.axis(i), state.axis(j)
    amps = state.amplitudes.copy()
    idx = [slice(None)] * state.n
    idx[ai] = 1
    idx[aj] = 1
    amps[tuple(idx)] *= -1
    return StateVector(amps, state.labels)


def entangle_graph(state: StateVector, graph: OpenGraph) -> StateVector:
    missing = sorted(set(graph.nodes) - set(state.labels))
    if missing:
        raise SimulationError(f"graph nodes missing from register: {missing}")
    for u, v in sorted(graph.edges):
        state = apply_cz(state, u, v)
    return state


class OutcomeSource:
    """Supplies measurement outcomes: seeded sampling or a forced branch."""

    def __init__(self, seed: int | None = None, forced: Sequence[int] | None = None):
        if forced is not None:
            self.mode = "forced"
            self.forced = [int(b) & 1 for b in forced]
            self.rng = None
        else:
            self.mode = "seeded"
            self.forced = None
            self.rng = np.random.default_rng(seed)
        self.count = 0

    @classmethod
    def seeded(cls, seed: int | None) -> "OutcomeSource":
        return cls(seed=seed)

    @classmethod
    def branch(cls, bits: Sequence[int]) -> "OutcomeSource":
        return cls(forced=bits)

    def draw(self, p0: float) -> int:
        if self.mode == "forced":
            if self.count >= len(self.forced):
                raise SimulationError("forced branch list exhausted")
            b = self.forced[self.count]
        else:
            b = 0 if self.rng.random() < p0 else 1
        self.count += 1
        return b


def measure_xy(state: StateVector, label: int, delta: float, src: OutcomeSource) -> tuple[int, StateVector, float]:
    """Measure in {|+_delta>, |-_delta>}; returns (outcome, post-state, probability)."""
    ax = state.axis(label)
    amps = np.moveaxis(state.amplitudes, ax, 0)
    ph = np.conj(phase(delta))
    post0 = (amps[0] + ph * amps[1]) / SQRT2
    post1 = (amps[0] - ph * amps[1]) / SQRT2
    p0 = float(np.vdot(post0, post0).real)
    p1 = float(np.vdot(post1, post1).real)
    total = p0 + p1
    s = src.draw(p0 / total)
    post, p = (post0, p0) if s == 0 else (post1, p1)
    if p < BRANCH_TOL:
        raise BranchError(f"outcome {s} on qubit {label} has probability {p:.3g}")
    labels = state.labels[:ax] + state.labels[ax + 1 :]
    return s, StateVector(post / np.sqrt(p), labels), p / total


def fidelity(a: StateVector, b: StateVector) -> float:
    if sorted(a.labels) != sorted(b.labels):
        raise SimulationError(f"label mismatch {a.labels} vs {b.labels}")
    b = b.reordered(a.labels)
    ov = np.vdot(a.vector(), b.vector()) / (a.norm() * b.norm())
    return float(min(1.0, abs(ov) ** 2))


def output_byproducts(pattern: MeasurementPattern, outcomes: Mapping[int, int]) -> dict[int, tuple[int, int]]:
    """Pauli frame (x, z) left on each output by the measured nodes."""
    frame = {o: [0, 0] for o in pattern.graph.outputs}
    for j, gj in pattern.gflow.g.items():
        if not outcomes.get(j, 0):
            continue
        for w in gj:
            if w in frame:
                frame[w][0] ^= 1
        for w in odd_neighbourhood(pattern.graph, gj):
            if w in frame and w != j:
                frame[w][1] ^= 1
    return {o: (x, z) for o, (x, z) in frame.items()}


def apply_frame(state: StateVector, frame: Mapping[int, tuple[int, int]]) -> StateVector:
    """Undo X^x Z^z on each listed qubit."""
    for o, (x, z) in frame.items():
        if x:
            state = apply_single(state, o, X)
        if z:
            state = apply_single(state, o, Z)
    return state


def run_pattern(
    pattern: MeasurementPattern,
    input_state: StateVector | None,
    src: OutcomeSource,
    max_qubits: int = MAX_QUBITS,
) -> tuple[StateVector, dict[int, int]]:
    """Execute a pattern directly and return the corrected output state."""
    graph = pattern.graph
    state = input_state if input_state is not None else StateVector.empty()
    if sorted(state.labels) != sorted(graph.inputs):
        raise SimulationError(f"input labels {state.labels} do not match inputs {graph.inputs}")
    for v in sorted(graph.nodes - set(graph.inputs)):
        state = prepare(state, v, PlusTheta(0), max_qubits)
    state = entangle_graph(state, graph)
    outcomes: dict[int, int] = {}
    for v in pattern.measurement_order():
        k = corrected_angle(pattern, v, outcomes)
        s, state, _ = measure_xy(state, v, k, src)
        outcomes[v] = s
    state = apply_frame(state, output_byproducts(pattern, outcomes))
    return state.reordered(graph.outputs), outcomes
