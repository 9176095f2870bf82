"""Interference-circuit simulation: the always-on-ancilla circuit, the
single-segment Hadamard test it contains, the common-unitary variant, and the
measure-and-reset instrument. Includes the exact Kraus operators, outcome
probabilities, estimator weights, and dense enumeration oracles used to cross
check every sampled path.

Phase-gate convention: the setting b multiplies the control branch by
(-i)^b before the X-basis measurement (an inverted phase gate on |1>).
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .backend import (
    BranchPair,
    DensityMatrix,
    Evolution,
    StateVector,
    apply_branch,
    apply_common_unitary,
    apply_unitary,
    branch_pair_from_state,
    unitary_matrix,
)
from .formulas import LcuTerm
from .limits import check_qubit_count
from .pauli import PauliString

_DEGENERATE = 1e-14

PHASE_GATE_FACTOR = -1.0j  # |1> -> -i |1>


def _resolve(spec) -> tuple[PauliString | Evolution | np.ndarray, complex]:
    """Split a phased-unitary spec into (base op, residual scalar phase)."""
    if isinstance(spec, LcuTerm):
        return spec.op, spec.phase
    if isinstance(spec, (PauliString, Evolution, np.ndarray)):
        return spec, 1.0 + 0.0j
    raise TypeError(f"not a phased unitary spec: {type(spec).__name__}")


@dataclass(frozen=True, eq=False)
class CircuitInstance:
    """One sampled circuit: per-segment controlled pairs (u_k, v_k), an
    optional common unitary applied uncontrolled in every segment, and the
    initial system state."""

    pairs: tuple
    psi0: StateVector
    common: object | None = None

    def __post_init__(self):
        if not self.pairs:
            raise ValueError("instance needs at least one segment")

    @property
    def nu(self) -> int:
        return len(self.pairs)

    @property
    def n(self) -> int:
        return self.psi0.n


@dataclass(frozen=True)
class MeasurementRecord:
    """Ancilla settings b, outcomes a, and per-measurement outcome
    probabilities (diagnostics); one entry per measurement performed."""

    a: tuple[int, ...]
    b: tuple[int, ...]
    probs: tuple[float, ...]


def kraus_operator(u, v, a: int, b: int) -> np.ndarray:
    """Dense K_{a|b} = ((-i)^b (-1)^a U + V) / 2."""
    u_op, u_phase = _resolve(u)
    v_op, v_phase = _resolve(v)
    um = unitary_matrix(u_op, phase=u_phase)
    vm = unitary_matrix(v_op, phase=v_phase)
    if um.shape != vm.shape:
        raise ValueError(f"unitary dimensions differ: {um.shape} vs {vm.shape}")
    return 0.5 * (((-1j) ** b) * ((-1.0) ** a) * um + vm)


def outcome_probability(u, v, rho: DensityMatrix, b: int, a: int) -> float:
    """tr(K_{a|b} rho K_{a|b}^dag); matches the closed interference forms."""
    k = kraus_operator(u, v, a, b)
    p = float(np.real(np.trace(k @ rho.entries @ k.conj().T)))
    return min(max(p, 0.0), 1.0)


def evolve_branches(inst: CircuitInstance) -> BranchPair:
    """Run all segments on a fresh branch pair; no phase gate, no measurement."""
    bp = branch_pair_from_state(inst.psi0)
    for u, v in inst.pairs:
        if inst.common is not None:
            bp = apply_common_unitary(bp, inst.common)
        u_op, u_phase = _resolve(u)
        v_op, v_phase = _resolve(v)
        bp = apply_branch(bp, u_op, v_op, u_phase, v_phase)
    return bp


def _x_measure(branch_v: np.ndarray, branch_u: np.ndarray, ledger: float, b: int,
               rng: np.random.Generator,
               phase_gate_factor: complex = PHASE_GATE_FACTOR) -> tuple[int, float, np.ndarray]:
    """Phase gate + X-basis ancilla measurement on a branch pair.

    Returns (outcome a, its probability, collapsed unnormalized system vector).
    """
    phased_u = (phase_gate_factor ** b) * branch_u
    w0 = 0.5 * (branch_v + phased_u)
    w1 = 0.5 * (branch_v - phased_u)
    scale = ledger * ledger
    if scale < _DEGENERATE:
        raise ValueError("zero-probability branch: inconsistent circuit instance")
    p0 = float(np.real(np.vdot(w0, w0))) / scale
    p1 = float(np.real(np.vdot(w1, w1))) / scale
    total = p0 + p1
    if total < _DEGENERATE:
        raise ValueError("zero-probability branch: inconsistent circuit instance")
    if p0 < _DEGENERATE:
        a = 1
    elif p1 < _DEGENERATE:
        a = 0
    else:
        a = 0 if rng.random() * total < p0 else 1
    return a, (p0 if a == 0 else p1), (w0 if a == 0 else w1)


def run_always_on(inst: CircuitInstance, b: int, rng: np.random.Generator,
                  phase_gate_factor: complex = PHASE_GATE_FACTOR,
                  ) -> tuple[MeasurementRecord, StateVector]:
    """Keep the ancilla alive through every segment, then apply the b-phase
    and measure once in the X basis. Returns the record and the normalized
    post-measurement system state."""
    bp = evolve_branches(inst)
    a, p, w = _x_measure(bp.branch_v, bp.branch_u, bp.ledger, b, rng, phase_gate_factor)
    sigma = w / np.linalg.norm(w)
    return MeasurementRecord((a,), (b,), (p,)), StateVector(inst.n, sigma)


def run_instrument(inst: CircuitInstance, b_vec, rng: np.random.Generator,
                   phase_gate_factor: complex = PHASE_GATE_FACTOR,
                   ) -> tuple[MeasurementRecord, StateVector]:
    """Measure and reset the ancilla within each segment, conditioning the
    state on every outcome a_k."""
    b_vec = tuple(int(b) for b in b_vec)
    if len(b_vec) != inst.nu:
        raise ValueError(f"need {inst.nu} settings, got {len(b_vec)}")
    psi = inst.psi0.amplitudes
    outcomes, probs = [], []
    for (u, v), b in zip(inst.pairs, b_vec):
        if inst.common is not None:
            psi = apply_unitary(psi, inst.common)
        u_op, u_phase = _resolve(u)
        v_op, v_phase = _resolve(v)
        branch_u = apply_unitary(psi, u_op, u_phase)
        branch_v = apply_unitary(psi, v_op, v_phase)
        a, p, w = _x_measure(branch_v, branch_u, 1.0, b, rng, phase_gate_factor)
        psi = w / np.linalg.norm(w)
        outcomes.append(a)
        probs.append(p)
    return MeasurementRecord(tuple(outcomes), b_vec, tuple(probs)), StateVector(inst.n, psi)


# --- estimator weights ---

def estimator_weight_single(rec: MeasurementRecord) -> complex:
    """2 i^b (-1)^a for the uniformly-randomized-b estimator; the factor 2 is
    exactly the importance weight of Pr(b) = 1/2."""
    if len(rec.a) != 1 or len(rec.b) != 1:
        raise ValueError("single-setting weight needs a one-measurement record")
    return 2.0 * (1j ** rec.b[0]) * ((-1.0) ** rec.a[0])


def estimator_weight_fixed_setting(rec: MeasurementRecord) -> complex:
    """i^b (-1)^a, the per-setting weight of the summed-over-b estimator."""
    if len(rec.a) != 1 or len(rec.b) != 1:
        raise ValueError("fixed-setting weight needs a one-measurement record")
    return (1j ** rec.b[0]) * ((-1.0) ** rec.a[0])


def estimator_weight_composite(rec: MeasurementRecord) -> float:
    """(-1)^{sum a_k} for the fixed b = 0 instrument configuration."""
    if any(b != 0 for b in rec.b):
        raise ValueError("composite weight is defined for the all-zero b setting")
    return (-1.0) ** sum(rec.a)


# --- dense enumeration oracles (tests and validation) ---

def unphysical_enumeration(u, v, rho: DensityMatrix) -> DensityMatrix:
    """Exact expectation of the randomized-b estimator: sum over (a, b) of
    Pr(b) * 2 i^b (-1)^a * (unnormalized conditional state). Equals U rho V^dag."""
    out = np.zeros_like(rho.entries)
    for b in (0, 1):
        for a in (0, 1):
            k = kraus_operator(u, v, a, b)
            out += (1j ** b) * ((-1.0) ** a) * (k @ rho.entries @ k.conj().T)
    return DensityMatrix(rho.n, out, physical=False)


def instrument_enumeration(rho: DensityMatrix, pairs, b_vec, common=None) -> DensityMatrix:
    """Exact expectation of i^{sum b} (-1)^{sum a} sigma^(nu) over all outcome
    trajectories of the measure-and-reset circuit (probabilities telescope, so
    each segment contributes a linear map)."""
    m = rho.entries
    common_m = None if common is None else unitary_matrix(common)
    for (u, v), b in zip(pairs, b_vec):
        if common_m is not None:
            m = common_m @ m @ common_m.conj().T
        nxt = np.zeros_like(m)
        for a in (0, 1):
            k = kraus_operator(u, v, a, b)
            nxt += (1j ** b) * ((-1.0) ** a) * (k @ m @ k.conj().T)
        m = nxt
    return DensityMatrix(rho.n, m, physical=False)


def symmetrised_oracle(rho: DensityMatrix, pairs) -> DensityMatrix:
    """The 2^nu-term equal-weight pairing oracle, built by composing
    rho -> (U_k rho V_k^dag + V_k rho U_k^dag) / 2 segment by segment."""
    check_qubit_count(rho.n, "symmetrised_oracle")
    m = rho.entries
    for u, v in pairs:
        u_op, u_phase = _resolve(u)
        v_op, v_phase = _resolve(v)
        um = unitary_matrix(u_op, phase=u_phase)
        vm = unitary_matrix(v_op, phase=v_phase)
        m = 0.5 * (um @ m @ vm.conj().T + vm @ m @ um.conj().T)
    return DensityMatrix(rho.n, m, physical=False)


def antisymmetrised_check(rho: DensityMatrix, u, v) -> DensityMatrix:
    """Exact single-segment enumeration with the b = 1 weight i (-1)^a;
    yields (U rho V^dag - V rho U^dag) / 2."""
    out = np.zeros_like(rho.entries)
    for a in (0, 1):
        k = kraus_operator(u, v, a, 1)
        out += 1j * ((-1.0) ** a) * (k @ rho.entries @ k.conj().T)
    return DensityMatrix(rho.n, out, physical=False)


# --- shot-record serialization ---

def shot_record_json(instance_id: int, rec: MeasurementRecord, weight: complex, seed: int) -> str:
    return json.dumps({
        "instance_id": instance_id,
        "b": list(rec.b),
        "a": list(rec.a),
        "weight": [weight.real, weight.imag],
        "seed": seed,
    }, sort_keys=True)
