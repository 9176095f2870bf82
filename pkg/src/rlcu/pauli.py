"""Exact algebra of phased Pauli words and real-weighted Pauli-sum operators.

Global phases are tracked as integer powers of i, so products, adjoints and
long operator chains stay exact; no floating-point phase drift can accumulate
across composed circuit segments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as _iterproduct

import numpy as np

from .limits import check_qubit_count

PAULI_LETTERS = "IXYZ"

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

# (p, q) -> (r, k) meaning p @ q == i**k * r for single letters
_LETTER_PRODUCT = {
    ("I", "I"): ("I", 0), ("I", "X"): ("X", 0), ("I", "Y"): ("Y", 0), ("I", "Z"): ("Z", 0),
    ("X", "I"): ("X", 0), ("X", "X"): ("I", 0), ("X", "Y"): ("Z", 1), ("X", "Z"): ("Y", 3),
    ("Y", "I"): ("Y", 0), ("Y", "X"): ("Z", 3), ("Y", "Y"): ("I", 0), ("Y", "Z"): ("X", 1),
    ("Z", "I"): ("Z", 0), ("Z", "X"): ("Y", 1), ("Z", "Y"): ("X", 3), ("Z", "Z"): ("I", 0),
}


@dataclass(frozen=True)
class PauliString:
    """An n-qubit Pauli word carrying a global phase i**phase_exp.

    Qubit 0 is the most significant tensor factor (leftmost letter), matching
    the bit order of computational-basis indices throughout the package.
    """

    n: int
    letters: tuple[str, ...]
    phase_exp: int = 0

    def __post_init__(self):
        if len(self.letters) != self.n:
            raise ValueError(f"expected {self.n} letters, got {len(self.letters)}")
        bad = [l for l in self.letters if l not in PAULI_LETTERS]
        if bad:
            raise ValueError(f"invalid Pauli letters {bad!r}")
        object.__setattr__(self, "phase_exp", int(self.phase_exp) % 4)

    @classmethod
    def from_label(cls, label: str, phase_exp: int = 0) -> "PauliString":
        return cls(len(label), tuple(label), phase_exp)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, ("I",) * n)

    @property
    def label(self) -> str:
        return "".join(self.letters)

    @property
    def phase(self) -> complex:
        return 1j ** self.phase_exp

    @property
    def weight(self) -> int:
        """Number of non-identity letters."""
        return sum(1 for l in self.letters if l != "I")

    def adjoint(self) -> "PauliString":
        # the bare word is Hermitian; only the phase conjugates
        return PauliString(self.n, self.letters, (-self.phase_exp) % 4)

    def with_phase(self, phase_exp: int) -> "PauliString":
        return PauliString(self.n, self.letters, phase_exp)

    def __repr__(self) -> str:
        pre = {0: "", 1: "i*", 2: "-", 3: "-i*"}[self.phase_exp]
        return f"PauliString({pre}{self.label})"


def pauli_multiply(p: PauliString, q: PauliString) -> PauliString:
    """Product p a q with the accumulated power-of-i phase kept exact."""
    if p.n != q.n:
        raise ValueError(f"qubit counts differ: {p.n} vs {q.n}")
    phase = p.phase_exp + q.phase_exp
    letters = []
    for a, b in zip(p.letters, q.letters):
        r, k = _LETTER_PRODUCT[(a, b)]
        letters.append(r)
        phase += k
    return PauliString(p.n, tuple(letters), phase % 4)


_MATRIX_CACHE: dict[PauliString, np.ndarray] = {}
_MATRIX_CACHE_MAX_N = 6


def pauli_to_matrix(p: PauliString) -> np.ndarray:
    """Dense 2^n x 2^n matrix of the phased word (read-only array)."""
    check_qubit_count(p.n, "pauli_to_matrix")
    cached = _MATRIX_CACHE.get(p)
    if cached is not None:
        return cached
    m = np.array([[1j ** p.phase_exp]], dtype=complex)
    for letter in p.letters:
        m = np.kron(m, _SINGLE[letter])
    m.setflags(write=False)
    if p.n <= _MATRIX_CACHE_MAX_N and len(_MATRIX_CACHE) < 4096:
        _MATRIX_CACHE[p] = m
    return m


def pauli_decompose(w: np.ndarray, cutoff: float = 1e-12) -> list[tuple[complex, PauliString]]:
    """Expand a dense matrix as sum_P c_P P with c_P = tr(P^dag W) / 2^n.

    Coefficients with |c_P| below ``cutoff`` are dropped.
    """
    w = np.asarray(w, dtype=complex)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {w.shape}")
    dim = w.shape[0]
    if dim < 1 or dim & (dim - 1):
        raise ValueError(f"matrix dimension {dim} is not a power of two")
    n = dim.bit_length() - 1
    check_qubit_count(n, "pauli_decompose")
    out = []
    for letters in _iterproduct(PAULI_LETTERS, repeat=n):
        word = PauliString(n, letters)
        coeff = np.einsum("ij,ji->", pauli_to_matrix(word), w) / dim
        if abs(coeff) >= cutoff:
            out.append((complex(coeff), word))
    return out


@dataclass(frozen=True)
class Hamiltonian:
    """Real-weighted sum of phase-free Pauli words; always Hermitian."""

    n: int
    terms: tuple[tuple[float, PauliString], ...]

    def __post_init__(self):
        for coeff, word in self.terms:
            if not math.isfinite(coeff):
                raise ValueError(f"non-finite coefficient {coeff!r}")
            if word.n != self.n:
                raise ValueError(f"word {word.label} has {word.n} qubits, expected {self.n}")
            if word.phase_exp != 0:
                raise ValueError(f"Hamiltonian words must be phase-free, got {word!r}")

    def to_matrix(self) -> np.ndarray:
        check_qubit_count(self.n, "Hamiltonian.to_matrix")
        m = np.zeros((1 << self.n, 1 << self.n), dtype=complex)
        for coeff, word in self.terms:
            m += coeff * pauli_to_matrix(word)
        return m

    def one_norm(self) -> float:
        return sum(abs(c) for c, _ in self.terms)


def hamiltonian_from_terms(n: int, terms) -> Hamiltonian:
    """Build a Hamiltonian, merging duplicate words by coefficient addition."""
    merged: dict[tuple[str, ...], float] = {}
    order: list[tuple[str, ...]] = []
    for coeff, word in terms:
        key = word.letters if isinstance(word, PauliString) else tuple(word)
        if key not in merged:
            merged[key] = 0.0
            order.append(key)
        merged[key] += float(coeff)
    return Hamiltonian(n, tuple((merged[k], PauliString(n, k)) for k in order))


def hamiltonian_parse(text: str) -> Hamiltonian:
    """Parse the plain-text format: one "coefficient word" pair per line.

    '#' starts a comment; blank lines are skipped; duplicate words merge by
    coefficient addition.
    """
    entries: list[tuple[float, str]] = []
    n = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {ln}: expected 'coefficient word', got {raw!r}")
        try:
            coeff = float(parts[0])
        except ValueError as exc:
            raise ValueError(f"line {ln}: malformed coefficient {parts[0]!r}") from exc
        word = parts[1].upper()
        bad = [c for c in word if c not in PAULI_LETTERS]
        if bad:
            raise ValueError(f"line {ln}: invalid Pauli letters {bad!r} in {parts[1]!r}")
        if n is None:
            n = len(word)
        elif len(word) != n:
            raise ValueError(f"line {ln}: word length {len(word)} differs from {n}")
        entries.append((coeff, word))
    if n is None:
        raise ValueError("no Hamiltonian terms found")
    return hamiltonian_from_terms(n, ((c, tuple(w)) for c, w in entries))


def hamiltonian_serialize(h: Hamiltonian) -> str:
    """Inverse of hamiltonian_parse up to term ordering; byte-stable output."""
    return "".join(f"{coeff!r} {word.label}\n" for coeff, word in h.terms)
