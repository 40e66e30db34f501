"""Selectively blind delegation of measurement-based quantum computations.

Modules:
    pattern    open graphs, g-flow, measurement patterns
    statevec   dense state-vector simulator for XY-plane patterns
    merge      merger graphs, bridge/break middles, output teleportation
    masking    future cones, influence sets and masking plans
    protocol   client/server runs of UBQC and SBQC over the simulator
    blindness  empirical transcript indistinguishability tests
    nogo       numerics for the remote-state-expander no-go results
    fileio     JSON formats for patterns, mergers and instances
"""

from .pattern import (
    GFlow,
    MeasurementPattern,
    OpenGraph,
    PatternError,
    corrected_angle,
    make_pattern,
    odd_neighbourhood,
    verify_gflow,
)
from .statevec import OutcomeSource, StateVector, fidelity, run_pattern

__all__ = [
    "GFlow",
    "MeasurementPattern",
    "OpenGraph",
    "OutcomeSource",
    "PatternError",
    "StateVector",
    "corrected_angle",
    "fidelity",
    "make_pattern",
    "odd_neighbourhood",
    "run_pattern",
    "verify_gflow",
]
