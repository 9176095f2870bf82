"""Classical-shadow acquisition and post-processing for the random local
Pauli-basis ensemble: snapshot inversion, observable estimation combined with
circuit estimator weights, median-of-means aggregation, and the variance /
shadow-norm audit.

The inverse measurement map factorizes per qubit as 3 * projector - identity;
it is never materialised as a 4^n superoperator.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product as _iterproduct

import numpy as np

from .backend import DensityMatrix, StateVector
from .pauli import Hamiltonian, PauliString, pauli_decompose, pauli_to_matrix

_BASIS_LETTERS = "XYZ"
_CODE = {"X": 0, "Y": 1, "Z": 2}
_SQRT2_INV = 1.0 / np.sqrt(2.0)

# rotation taking the basis eigenstates to the computational basis
_ROTATIONS = {
    0: np.array([[_SQRT2_INV, _SQRT2_INV], [_SQRT2_INV, -_SQRT2_INV]], dtype=complex),  # X: H
    1: np.array([[_SQRT2_INV, -1.0j * _SQRT2_INV], [_SQRT2_INV, 1.0j * _SQRT2_INV]], dtype=complex),  # Y: H S^dag
    2: np.eye(2, dtype=complex),  # Z
}


@dataclass(frozen=True)
class ShadowSnapshot:
    """One randomized measurement: per-qubit basis letters, outcome bits, the
    attached circuit weight, and the normalisation scalar of the pipeline."""

    basis: str
    z: str
    weight: complex = 1.0 + 0.0j
    norm: float = 1.0

    @property
    def n(self) -> int:
        return len(self.basis)


@dataclass(frozen=True)
class ObservableSpec:
    """Hermitian observable as a real combination of phase-free Pauli words."""

    name: str
    terms: tuple[tuple[float, PauliString], ...]

    def __post_init__(self):
        for coeff, word in self.terms:
            if word.phase_exp != 0:
                raise ValueError("observable words must be phase-free")
            if word.n != self.terms[0][1].n:
                raise ValueError("observable words act on different qubit counts")

    @property
    def n(self) -> int:
        return self.terms[0][1].n

    @property
    def locality(self) -> int:
        return max(word.weight for _, word in self.terms)

    def to_matrix(self) -> np.ndarray:
        out = np.zeros((1 << self.n, 1 << self.n), dtype=complex)
        for coeff, word in self.terms:
            out += coeff * pauli_to_matrix(word)
        return out

    @classmethod
    def single(cls, label: str, coeff: float = 1.0) -> "ObservableSpec":
        return cls(label, ((coeff, PauliString.from_label(label)),))


def observable_from_config(entry) -> ObservableSpec:
    """Accepts 'ZI', [coeff, 'ZI'], a list of such pairs, or
    {'name': ..., 'terms': [[coeff, word], ...]}."""
    if isinstance(entry, str):
        return ObservableSpec.single(entry)
    if isinstance(entry, dict):
        terms = tuple((float(c), PauliString.from_label(w)) for c, w in entry["terms"])
        return ObservableSpec(entry.get("name", "+".join(w for _, w in entry["terms"])), terms)
    if isinstance(entry, (list, tuple)):
        if len(entry) == 2 and isinstance(entry[1], str) and not isinstance(entry[0], (list, tuple)):
            return ObservableSpec(str(entry[1]), ((float(entry[0]), PauliString.from_label(entry[1])),))
        terms = tuple((float(c), PauliString.from_label(w)) for c, w in entry)
        return ObservableSpec("+".join(w for _, w in entry), terms)
    raise ValueError(f"cannot parse observable spec {entry!r}")


# --- acquisition ---

def _rotate_to_basis(vec: np.ndarray, n: int, codes: np.ndarray) -> np.ndarray:
    out = vec.reshape([2] * n)
    for q in range(n):
        code = int(codes[q])
        if code == 2:
            continue
        out = np.moveaxis(np.tensordot(_ROTATIONS[code], out, axes=([1], [q])), 0, q)
    return out.reshape(-1)


def sample_shadow_arrays(vec: np.ndarray, n: int, rng: np.random.Generator,
                         ) -> tuple[np.ndarray, np.ndarray]:
    """Low-level sampler: uniform basis codes (0=X,1=Y,2=Z) then Born-rule
    bits in the rotated frame. Draw order is fixed: bases first, then z."""
    codes = rng.integers(0, 3, size=n)
    rotated = _rotate_to_basis(vec, n, codes)
    p = np.abs(rotated) ** 2
    cum = np.cumsum(p)
    z = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    z = min(z, len(p) - 1)
    bits = np.array([(z >> (n - 1 - q)) & 1 for q in range(n)], dtype=np.uint8)
    return codes.astype(np.uint8), bits


def sample_shadow(s: StateVector, rng: np.random.Generator) -> ShadowSnapshot:
    """One randomized Pauli-basis measurement of a normalized state."""
    norm = np.linalg.norm(s.amplitudes)
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"cannot shadow-sample an unnormalized state (|psi| = {norm})")
    codes, bits = sample_shadow_arrays(s.amplitudes, s.n, rng)
    basis = "".join(_BASIS_LETTERS[c] for c in codes)
    z = "".join(str(b) for b in bits)
    return ShadowSnapshot(basis, z)


def snapshot_matrix(snap: ShadowSnapshot) -> DensityMatrix:
    """Dense inverted snapshot: per-qubit (identity + 3 (-1)^z W) / 2."""
    m = np.array([[1.0]], dtype=complex)
    for letter, bit in zip(snap.basis, snap.z):
        w = pauli_to_matrix(PauliString.from_label(letter))
        sign = -3.0 if bit == "1" else 3.0
        m = np.kron(m, 0.5 * (np.eye(2, dtype=complex) + sign * w))
    return DensityMatrix(len(snap.basis), m, physical=False)


# --- columnar batch for fast estimation ---

@dataclass(frozen=True, eq=False)
class SnapshotBatch:
    """Columnar store of many snapshots (basis codes, bits, weights, norms)."""

    bases: np.ndarray   # (N, n) uint8, 0=X 1=Y 2=Z
    zbits: np.ndarray   # (N, n) uint8
    weights: np.ndarray  # (N,) complex
    norms: np.ndarray   # (N,) float

    def __len__(self) -> int:
        return self.bases.shape[0]

    @property
    def n(self) -> int:
        return self.bases.shape[1]

    @classmethod
    def from_snapshots(cls, snaps) -> "SnapshotBatch":
        snaps = list(snaps)
        if not snaps:
            raise ValueError("empty snapshot list")
        n = snaps[0].n
        bases = np.array([[_CODE[c] for c in s.basis] for s in snaps], dtype=np.uint8)
        zbits = np.array([[int(c) for c in s.z] for s in snaps], dtype=np.uint8)
        weights = np.array([s.weight for s in snaps], dtype=complex)
        norms = np.array([s.norm for s in snaps], dtype=float)
        if bases.shape[1] != n or zbits.shape[1] != n:
            raise ValueError("inconsistent snapshot qubit counts")
        return cls(bases, zbits, weights, norms)


def _as_batch(snapshots) -> SnapshotBatch:
    if isinstance(snapshots, SnapshotBatch):
        return snapshots
    return SnapshotBatch.from_snapshots(snapshots)


def observable_values(snapshots, o: ObservableSpec) -> np.ndarray:
    """Per-snapshot estimates norm * weight * tr(O snapshot), computed by
    per-qubit trace factorization in O(terms * n) per snapshot."""
    batch = _as_batch(snapshots)
    if o.n != batch.n:
        raise ValueError(f"observable acts on {o.n} qubits, snapshots have {batch.n}")
    vals = np.zeros(len(batch), dtype=complex)
    for coeff, word in o.terms:
        f = np.full(len(batch), coeff, dtype=float)
        for q, letter in enumerate(word.letters):
            if letter == "I":
                continue
            match = batch.bases[:, q] == _CODE[letter]
            f = f * np.where(match, 3.0 * (1.0 - 2.0 * batch.zbits[:, q].astype(float)), 0.0)
        vals += f
    return vals * batch.weights * batch.norms


def estimate_observable(snapshots, o: ObservableSpec) -> complex:
    """Mean of the per-snapshot estimates over the pool."""
    return complex(observable_values(snapshots, o).mean())


def median_of_means(estimates, k_batches: int) -> float:
    """Median of k contiguous batch means; k = 1 is the plain mean."""
    values = np.asarray(list(estimates), dtype=float)
    if values.size == 0:
        raise ValueError("empty estimate list")
    if k_batches < 1 or k_batches > values.size:
        raise ValueError(f"k_batches must be in [1, {values.size}], got {k_batches}")
    means = [chunk.mean() for chunk in np.array_split(values, k_batches)]
    return float(np.median(means))


def shadow_norm_bound(o: ObservableSpec) -> float:
    """l1-aggregated random-Pauli-ensemble bound (sum_m |c_m| 3^{w_m/2})^2."""
    return float(sum(abs(c) * 3.0 ** (word.weight / 2.0) for c, word in o.terms)) ** 2


@dataclass(frozen=True)
class VarianceAudit:
    variance: float
    bound: float        # shadow-norm bound of the observable
    limit: float        # 2 * bound, the audited ceiling
    allowance: float    # 3 sigma statistical slack on the variance estimate
    passed: bool
    n_samples: int


def variance_audit(snapshots, o: ObservableSpec, min_samples: int = 1000) -> VarianceAudit:
    """Check the empirical single-shot variance against twice the shadow-norm
    bound, with a 3 sigma allowance on the variance estimate itself."""
    batch = _as_batch(snapshots)
    if len(batch) < min_samples:
        raise ValueError(f"variance audit needs >= {min_samples} snapshots, got {len(batch)}")
    vals = observable_values(batch, o)
    mean = vals.mean()
    sq = np.abs(vals) ** 2
    var = float(sq.mean() - abs(mean) ** 2)
    allowance = 3.0 * float(sq.std(ddof=1)) / np.sqrt(len(batch))
    bound = shadow_norm_bound(o)
    limit = 2.0 * bound
    return VarianceAudit(var, bound, limit, allowance, var <= limit + allowance, len(batch))


# --- the inverse measurement map on dense operators ---

def inverse_measurement_channel(m: np.ndarray) -> np.ndarray:
    """Dense application of the inverted measurement map: each Pauli component
    is scaled by 3^weight. Self-dual: tr(M^-1(A) B) == tr(A M^-1(B))."""
    dim = m.shape[0]
    n = dim.bit_length() - 1
    out = np.zeros_like(np.asarray(m, dtype=complex))
    for coeff, word in pauli_decompose(m, cutoff=0.0):
        out += coeff * (3.0 ** word.weight) * pauli_to_matrix(word)
    return out


def enumerate_snapshot_mean(s: StateVector) -> np.ndarray:
    """Exact expectation of the inverted snapshot over every (basis, z) pair,
    weighted by the Born probabilities; reproduces the input state."""
    n = s.n
    rho = np.outer(s.amplitudes, s.amplitudes.conj())
    total = np.zeros_like(rho)
    for codes in _iterproduct(range(3), repeat=n):
        rotated = _rotate_to_basis(s.amplitudes, n, np.array(codes))
        probs = np.abs(rotated) ** 2
        for z in range(1 << n):
            if probs[z] == 0.0:
                continue
            bits = "".join(str((z >> (n - 1 - q)) & 1) for q in range(n))
            basis = "".join(_BASIS_LETTERS[c] for c in codes)
            snap = snapshot_matrix(ShadowSnapshot(basis, bits)).entries
            total += (probs[z] / 3 ** n) * snap
    return total


# --- snapshot-log serialization ---

def snapshot_to_json(snap: ShadowSnapshot) -> str:
    return json.dumps({
        "basis": snap.basis,
        "z": snap.z,
        "weight": [snap.weight.real, snap.weight.imag],
        "norm": snap.norm,
    }, sort_keys=True)


def snapshot_from_json(line: str) -> ShadowSnapshot:
    d = json.loads(line)
    return ShadowSnapshot(d["basis"], d["z"], complex(d["weight"][0], d["weight"][1]), d["norm"])
