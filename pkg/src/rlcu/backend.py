"""Exact dense engine for small systems: state vectors, density matrices,
Hamiltonian evolution by eigendecomposition, the unphysical-state oracle
U rho V^dag, and the two-branch encoding of the ancilla-system joint state.

All value types are immutable; operations return fresh values. Stochastic
operations take an explicit numpy Generator so runs are reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .limits import check_qubit_count
from .pauli import Hamiltonian, PauliString, pauli_to_matrix

_NORM_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class StateVector:
    n: int
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (1 << self.n,):
            raise ValueError(f"expected {1 << self.n} amplitudes, got shape {amp.shape}")
        object.__setattr__(self, "amplitudes", amp)
        if self.normalized:
            norm = np.linalg.norm(amp)
            if abs(norm - 1.0) > _NORM_TOL:
                raise ValueError(f"state marked normalized but |psi| = {norm}")

    def density(self) -> "DensityMatrix":
        a = self.amplitudes
        return DensityMatrix(self.n, np.outer(a, a.conj()), physical=self.normalized)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian operator on n qubits; ``physical`` adds the trace-one check.

    Unphysical effective states (e.g. U rho V^dag) carry physical=False and
    skip the Hermiticity/trace invariants entirely.
    """

    n: int
    entries: np.ndarray
    physical: bool = True

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        dim = 1 << self.n
        if m.shape != (dim, dim):
            raise ValueError(f"expected {dim}x{dim} entries, got shape {m.shape}")
        object.__setattr__(self, "entries", m)
        if self.physical:
            if np.abs(m - m.conj().T).max() > _NORM_TOL:
                raise ValueError("density matrix is not Hermitian")
            if abs(np.trace(m) - 1.0) > _NORM_TOL:
                raise ValueError(f"density matrix has trace {np.trace(m)}")


@dataclass(frozen=True, eq=False)
class BranchPair:
    """Ancilla-system joint state stored as the two coherent system branches.

    The joint pure state is (|0> (x) branch_v + |1> (x) branch_u) / sqrt(2)
    with the ancilla as the most significant qubit. ``ledger`` is the norm of
    that joint vector; unitaries preserve it, measurement collapses scale it
    by the square root of the outcome probability.
    """

    n: int
    branch_v: np.ndarray
    branch_u: np.ndarray
    ledger: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.branch_v, dtype=complex)
        u = np.asarray(self.branch_u, dtype=complex)
        dim = 1 << self.n
        if v.shape != (dim,) or u.shape != (dim,):
            raise ValueError("branch vectors must both have length 2^n")
        object.__setattr__(self, "branch_v", v)
        object.__setattr__(self, "branch_u", u)


@dataclass(frozen=True)
class Evolution:
    """Specification of the phased time evolution ``phase * exp(-i H t)``."""

    h: Hamiltonian
    t: float
    phase: complex = 1.0 + 0.0j


def basis_state(bits: str) -> StateVector:
    n = len(bits)
    amp = np.zeros(1 << n, dtype=complex)
    amp[int(bits, 2)] = 1.0
    return StateVector(n, amp)


def plus_state(n: int) -> StateVector:
    dim = 1 << n
    return StateVector(n, np.full(dim, 1.0 / np.sqrt(dim), dtype=complex))


def state_from_spec(spec: str, n: int | None = None) -> StateVector:
    """Initial-state shorthand: 'plus-all' or a bitstring like '010'."""
    if spec == "plus-all":
        if n is None:
            raise ValueError("'plus-all' needs an explicit qubit count")
        return plus_state(n)
    if set(spec) <= {"0", "1"}:
        if n is not None and len(spec) != n:
            raise ValueError(f"bitstring {spec!r} has {len(spec)} qubits, expected {n}")
        return basis_state(spec)
    raise ValueError(f"unknown initial state spec {spec!r}")


# --- Hamiltonian eigensystems (cached; exact evolution below) ---

_EIG_CACHE: dict[Hamiltonian, tuple[np.ndarray, np.ndarray]] = {}


def hamiltonian_eigensystem(h: Hamiltonian) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors of the dense Hamiltonian (cached)."""
    hit = _EIG_CACHE.get(h)
    if hit is not None:
        return hit
    check_qubit_count(h.n, "hamiltonian_eigensystem")
    m = h.to_matrix()
    if np.abs(m - m.conj().T).max() > 1e-10:
        raise ValueError("dense reconstruction is not Hermitian")
    evals, evecs = np.linalg.eigh(m)
    evals.setflags(write=False)
    evecs.setflags(write=False)
    if len(_EIG_CACHE) < 64:
        _EIG_CACHE[h] = (evals, evecs)
    return evals, evecs


def _evolve_vector(h: Hamiltonian, t: float, vec: np.ndarray) -> np.ndarray:
    evals, evecs = hamiltonian_eigensystem(h)
    return evecs @ (np.exp(-1j * evals * t) * (evecs.conj().T @ vec))


def exact_evolve(h: Hamiltonian, t: float, s: StateVector) -> StateVector:
    """exp(-i H t) |s> by eigendecomposition; exact at desk scale."""
    if h.n != s.n:
        raise ValueError(f"Hamiltonian acts on {h.n} qubits, state has {s.n}")
    check_qubit_count(s.n, "exact_evolve")
    return StateVector(s.n, _evolve_vector(h, t, s.amplitudes), normalized=s.normalized)


def evolution_matrix(h: Hamiltonian, t: float) -> np.ndarray:
    evals, evecs = hamiltonian_eigensystem(h)
    return (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T


# --- fast Pauli action on raw vectors ---

_ACTION_CACHE: dict[PauliString, tuple[np.ndarray, np.ndarray]] = {}


def _pauli_action(p: PauliString) -> tuple[np.ndarray, np.ndarray]:
    """(index, factor) arrays with (P psi)[j] = factor[j] * psi[index[j]]."""
    hit = _ACTION_CACHE.get(p)
    if hit is not None:
        return hit
    n = p.n
    xmask = zymask = 0
    n_y = 0
    for q, letter in enumerate(p.letters):
        bit = 1 << (n - 1 - q)
        if letter in "XY":
            xmask |= bit
        if letter in "ZY":
            zymask |= bit
        if letter == "Y":
            n_y += 1
    idx = np.arange(1 << n) ^ xmask
    parity = np.bitwise_count(idx & zymask) & 1
    factor = (1j ** ((p.phase_exp + n_y) % 4)) * np.where(parity, -1.0, 1.0)
    idx.setflags(write=False)
    factor.setflags(write=False)
    if len(_ACTION_CACHE) < 4096:
        _ACTION_CACHE[p] = (idx, factor)
    return idx, factor


def apply_unitary(vec: np.ndarray, op, phase: complex = 1.0) -> np.ndarray:
    """Apply a phased unitary spec (PauliString, Evolution or dense matrix)."""
    if isinstance(op, PauliString):
        idx, factor = _pauli_action(op)
        out = factor * vec[idx]
    elif isinstance(op, Evolution):
        out = op.phase * _evolve_vector(op.h, op.t, vec)
    elif isinstance(op, np.ndarray):
        out = op @ vec
    else:
        raise TypeError(f"cannot apply unitary of type {type(op).__name__}")
    if phase != 1.0:
        out = phase * out
    return out


def unitary_matrix(op, n: int | None = None, phase: complex = 1.0) -> np.ndarray:
    """Dense matrix of a phased unitary spec."""
    if isinstance(op, PauliString):
        m = pauli_to_matrix(op)
    elif isinstance(op, Evolution):
        m = op.phase * evolution_matrix(op.h, op.t)
    elif isinstance(op, np.ndarray):
        m = op
    else:
        raise TypeError(f"cannot realise unitary of type {type(op).__name__}")
    if n is not None and m.shape[0] != (1 << n):
        raise ValueError(f"unitary acts on dimension {m.shape[0]}, expected {1 << n}")
    return phase * m if phase != 1.0 else m


def exact_unphysical(u: np.ndarray, v: np.ndarray, rho: DensityMatrix) -> DensityMatrix:
    """Ground-truth oracle for the effective state U rho V^dag."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    dim = 1 << rho.n
    if u.shape != (dim, dim) or v.shape != (dim, dim):
        raise ValueError("unitary dimensions do not match the state")
    return DensityMatrix(rho.n, u @ rho.entries @ v.conj().T, physical=False)


# --- branch-pair operations ---

def branch_pair_from_state(s: StateVector) -> BranchPair:
    amp = s.amplitudes
    return BranchPair(s.n, amp.copy(), amp.copy(), ledger=float(np.linalg.norm(amp)))


def apply_branch(bp: BranchPair, u, v, u_phase: complex = 1.0, v_phase: complex = 1.0) -> BranchPair:
    """Controlled pair: u acts on the |1> branch, v on the |0> branch."""
    return BranchPair(
        bp.n,
        apply_unitary(bp.branch_v, v, v_phase),
        apply_unitary(bp.branch_u, u, u_phase),
        bp.ledger,
    )


def apply_pauli_branch(bp: BranchPair, u: PauliString, v: PauliString) -> BranchPair:
    if not isinstance(u, PauliString) or not isinstance(v, PauliString):
        raise TypeError("apply_pauli_branch expects PauliString operands")
    if u.n != bp.n or v.n != bp.n:
        raise ValueError("Pauli words do not match the branch dimension")
    return apply_branch(bp, u, v)


def apply_common_unitary(bp: BranchPair, w) -> BranchPair:
    """Uncontrolled unitary applied identically to both branches."""
    return BranchPair(
        bp.n,
        apply_unitary(bp.branch_v, w),
        apply_unitary(bp.branch_u, w),
        bp.ledger,
    )


def branch_reconstruct(bp: BranchPair) -> np.ndarray:
    """Joint (n+1)-qubit vector (|0> branch_v + |1> branch_u) / sqrt(2)."""
    return np.concatenate([bp.branch_v, bp.branch_u]) / np.sqrt(2.0)


# --- measurement ---

def born_probabilities(vec: np.ndarray) -> np.ndarray:
    p = np.abs(vec) ** 2
    return p / p.sum()


def sample_computational(s: StateVector, rng: np.random.Generator) -> str:
    """Draw a computational-basis bitstring by the Born rule."""
    amp = s.amplitudes
    norm = np.linalg.norm(amp)
    if abs(norm - 1.0) > _NORM_TOL:
        raise ValueError(f"cannot sample an unnormalized state (|psi| = {norm})")
    p = np.abs(amp) ** 2
    cum = np.cumsum(p)
    z = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    z = min(z, len(amp) - 1)
    return format(z, f"0{s.n}b")


# --- debug serialization of dense matrices ---

def matrix_to_debug_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {
        "shape": list(m.shape),
        "entries": [[float(x.real), float(x.imag)] for x in m.reshape(-1)],
    }


def matrix_from_debug_json(payload: dict) -> np.ndarray:
    flat = np.array([re + 1j * im for re, im in payload["entries"]], dtype=complex)
    return flat.reshape(payload["shape"])
