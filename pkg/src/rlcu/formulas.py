"""Construction, truncation and sampling of probability-weighted unitary
ensembles: the generic single-step form, composite products over segments,
the Trotter-error compensation formula, the paired-term channel decomposition
used for interaction terms, and the Gaussian spectral-filter ensemble.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .backend import Evolution, evolution_matrix, hamiltonian_eigensystem, unitary_matrix
from .limits import check_qubit_count
from .pauli import Hamiltonian, PauliString, pauli_decompose

_FOURTH_ROOTS = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


@dataclass(frozen=True)
class LcuTerm:
    """One sampled unit: probability, base unitary and residual unit phase.

    Fourth-root-of-unity phases live inside the PauliString itself; ``phase``
    only carries what cannot be represented that way.
    """

    prob: float
    op: PauliString | Evolution
    phase: complex = 1.0 + 0.0j

    def matrix(self, n: int | None = None) -> np.ndarray:
        return unitary_matrix(self.op, n, self.phase)


@dataclass(frozen=True, eq=False)
class LcuFormula:
    """Probability-weighted unitary ensemble with l1-normalisation ``mu``.

    ``mu * sum_i prob_i * U_i`` reconstructs ``target`` up to the declared
    ``truncation_error`` (0 for exact formulas).
    """

    mu: float
    terms: tuple[LcuTerm, ...]
    target: np.ndarray | None = None
    truncation_error: float = 0.0
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.terms:
            raise ValueError("formula needs at least one term")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        probs = np.array([t.prob for t in self.terms])
        if probs.min() < 0:
            raise ValueError("negative term probability")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"term probabilities sum to {probs.sum()}, not 1")
        object.__setattr__(self, "_cum", np.cumsum(probs))

    @property
    def n(self) -> int:
        op = self.terms[0].op
        return op.n if isinstance(op, PauliString) else op.h.n

    def reconstruct(self) -> np.ndarray:
        """mu * sum_i prob_i * (phased unitary matrix)."""
        out = np.zeros((1 << self.n, 1 << self.n), dtype=complex)
        for t in self.terms:
            out += t.prob * t.matrix(self.n)
        return self.mu * out


def lcu_from_coefficients(coeffs: Sequence[complex], unitaries: Sequence[PauliString],
                          target: np.ndarray | None = None) -> LcuFormula:
    """Turn complex coefficients into a sampling formula.

    Each alpha*e^{i phi} becomes a term with probability |alpha|/mu; the phase
    is folded into the word when it is an exact fourth root of unity and kept
    as a residual complex scalar otherwise. mu = sum |alpha|.
    """
    if len(coeffs) != len(unitaries):
        raise ValueError("coefficient and unitary lists differ in length")
    if not coeffs:
        raise ValueError("empty coefficient list")
    mags = [abs(c) for c in coeffs]
    mu = sum(mags)
    if mu <= 0:
        raise ValueError("all coefficients vanish")
    terms = []
    for c, mag, word in zip(coeffs, mags, unitaries):
        if mag == 0:
            continue
        phase = c / mag
        for k, root in enumerate(_FOURTH_ROOTS):
            if abs(phase - root) < 1e-12:
                word = word.with_phase((word.phase_exp + k) % 4)
                phase = 1.0 + 0.0j
                break
        terms.append(LcuTerm(mag / mu, word, complex(phase)))
    return LcuFormula(mu, tuple(terms), target=target)


def sample_instance(f: LcuFormula, rng: np.random.Generator) -> LcuTerm:
    """Draw one term with its probability; mu * E[matrix] is the target."""
    i = int(np.searchsorted(f._cum, rng.random() * f._cum[-1], side="right"))
    return f.terms[min(i, len(f.terms) - 1)]


@dataclass(frozen=True, eq=False)
class CompositeLcu:
    """Product of per-segment formulas; mu_T is the product of segment mu's."""

    segments: tuple[LcuFormula, ...]
    mu_T: float

    def __post_init__(self):
        prod = 1.0
        for seg in self.segments:
            prod *= seg.mu
        if abs(self.mu_T - prod) > 1e-12 * max(1.0, abs(prod)):
            raise ValueError(f"mu_T {self.mu_T} != product of segment mus {prod}")

    @property
    def nu(self) -> int:
        return len(self.segments)

    def sample_chain(self, rng: np.random.Generator) -> list[LcuTerm]:
        return [sample_instance(seg, rng) for seg in self.segments]


def composite_from_segments(f: LcuFormula, nu: int) -> CompositeLcu:
    if nu < 1:
        raise ValueError(f"segment count must be >= 1, got {nu}")
    return CompositeLcu((f,) * nu, f.mu ** nu)


def composite_bounded(builder: Callable[[float], LcuFormula], t_total: float,
                      mu_max: float = 2.0, max_segments: int = 100000) -> tuple[CompositeLcu, float]:
    """Smallest segment count nu with mu(t_total/nu)^nu <= mu_max.

    ``builder(dt)`` must return the single-segment formula at step size dt.
    Returns the composite and the chosen dt. Ties break toward smaller nu
    because the scan is ascending.
    """
    for nu in range(1, max_segments + 1):
        dt = t_total / nu
        f = builder(dt)
        if f.mu ** nu <= mu_max:
            return composite_from_segments(f, nu), dt
    raise ValueError(f"no segment count up to {max_segments} meets mu_T <= {mu_max}")


def truncate_formula(f: LcuFormula, eps: float) -> LcuFormula:
    """Greedily drop lowest-weight terms while the dense reconstruction
    defect (spectral norm against the stored target) stays within eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if f.target is None:
        raise ValueError("formula carries no dense target to truncate against")

    def defect(kept: list[LcuTerm]) -> float:
        rec = f.mu * sum(t.prob * t.matrix(f.n) for t in kept)
        return float(np.linalg.norm(f.target - rec, 2))

    kept = sorted(f.terms, key=lambda t: t.prob, reverse=True)
    if defect(kept) > eps:
        raise ValueError(f"eps {eps} is below the defect of the full formula")
    while len(kept) > 1 and defect(kept[:-1]) <= eps:
        kept.pop()
    total = sum(t.prob for t in kept)
    terms = tuple(LcuTerm(t.prob / total, t.op, t.phase) for t in kept)
    return LcuFormula(f.mu * total, terms, target=f.target, truncation_error=defect(kept))


# --- Trotter-error compensation ---

def trotter_step_matrix(grouping: Sequence[Hamiltonian], dt: float) -> np.ndarray:
    """Ordered product of group exponentials; the first group acts first."""
    if not grouping:
        raise ValueError("empty grouping")
    dim = 1 << grouping[0].n
    u = np.eye(dim, dtype=complex)
    for g in grouping:
        u = evolution_matrix(g, dt) @ u
    return u


def split_each_term(h: Hamiltonian) -> list[Hamiltonian]:
    """Default first-order grouping: every term is its own group."""
    return [Hamiltonian(h.n, ((c, w),)) for c, w in h.terms]


def trotter_compensation_formula(h: Hamiltonian, grouping: Sequence[Hamiltonian],
                                 dt: float, cutoff: float = 1e-12) -> LcuFormula:
    """Exact Pauli sampling formula for W = exp(-i H dt) U_S^dag.

    U_S is the ordered Trotter product of the grouping; sampling W alongside
    an uncontrolled U_S per segment removes the Trotter bias entirely.
    """
    check_qubit_count(h.n, "trotter_compensation_formula")
    for g in grouping:
        if g.n != h.n:
            raise ValueError("grouping qubit count differs from the Hamiltonian")
    total = sum(g.to_matrix() for g in grouping)
    hm = h.to_matrix()
    scale = max(1.0, float(np.abs(hm).max()))
    if np.abs(total - hm).max() > 1e-9 * scale:
        raise ValueError("grouping does not cover the Hamiltonian")
    w = evolution_matrix(h, dt) @ trotter_step_matrix(grouping, dt).conj().T
    decomp = pauli_decompose(w, cutoff)
    return lcu_from_coefficients([c for c, _ in decomp], [p for _, p in decomp], target=w)


# --- paired-term channel decomposition (interaction terms) ---

@dataclass(frozen=True)
class PairedTerm:
    """A sampled channel term acting as rho -> left rho + rho left^dag
    (or the identity map when ``left`` is the bare identity word).

    ``pair_weight`` converts the interference circuit's symmetrised output
    (which carries a 1/2) back to the full paired action: 1 for the identity
    term, 2 for operator pairs.
    """

    prob: float
    left: PauliString
    pair_weight: float

    def action(self, rho: np.ndarray) -> np.ndarray:
        if self.left.weight == 0 and self.left.phase_exp == 0:
            return rho
        m = unitary_matrix(self.left)
        return m @ rho + rho @ m.conj().T


@dataclass(frozen=True, eq=False)
class PairedLcuFormula:
    """Channel decomposition mu * (alpha_0 Id + sum_i alpha_i pair_i)."""

    mu: float
    terms: tuple[PairedTerm, ...]
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        probs = np.array([t.prob for t in self.terms])
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"term probabilities sum to {probs.sum()}, not 1")
        object.__setattr__(self, "_cum", np.cumsum(probs))

    @property
    def n(self) -> int:
        return self.terms[0].left.n

    def sample(self, rng: np.random.Generator) -> PairedTerm:
        i = int(np.searchsorted(self._cum, rng.random() * self._cum[-1], side="right"))
        return self.terms[min(i, len(self.terms) - 1)]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Analytic channel action: rho - i dt [H_int, rho] exactly."""
        out = np.zeros_like(rho)
        for t in self.terms:
            out += t.prob * t.action(rho)
        return self.mu * out


def pqs_channel_decomposition(h_int: Hamiltonian, dt: float) -> PairedLcuFormula:
    """First-order decomposition of exp(-i H_int dt) (.) exp(i H_int dt).

    With mu = 1 + dt * sum|p_i| the identity term gets weight mu*alpha_0 = 1
    and each pair gets mu*alpha_i = |p_i|*dt; signs of the coefficients are
    absorbed into the phase of the paired word.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    live = [(c, w) for c, w in h_int.terms if c != 0.0]
    mu = 1.0 + dt * sum(abs(c) for c, _ in live)
    alpha0 = 1.0 / mu
    if alpha0 <= 0:
        raise ValueError("dt too large: identity weight is not positive")
    terms = [PairedTerm(alpha0, PauliString.identity(h_int.n), 1.0)]
    for coeff, word in live:
        # (-i) * sign(coeff) * P: phase_exp 3 for +, 1 for -
        phased = word.with_phase(3 if coeff > 0 else 1)
        terms.append(PairedTerm(abs(coeff) * dt / mu, phased, 2.0))
    return PairedLcuFormula(mu, tuple(terms))


def pqs_propagate(f: PairedLcuFormula, rho: np.ndarray, u_s: np.ndarray | None, nu: int) -> np.ndarray:
    """Deterministic composition of the decomposed channel over nu segments
    (local step first, then the interaction map). This is what the sampled
    estimator converges to; its distance from the exact evolution is the
    first-order discretisation envelope."""
    out = rho
    for _ in range(nu):
        if u_s is not None:
            out = u_s @ out @ u_s.conj().T
        out = f.apply(out)
    return out


# --- Gaussian spectral-filter ensemble ---

@dataclass(frozen=True)
class GaussianFilterEnsemble:
    """Ensemble of phased time evolutions whose mean implements the spectral
    filter exp(-tau^2 (H - omega)^2 / 2); x is drawn standard-normal."""

    tau: float
    omega: float

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError(f"tau must be non-negative, got {self.tau}")


def sample_filter_unitary(g: GaussianFilterEnsemble, h: Hamiltonian,
                          rng: np.random.Generator) -> tuple[Evolution, float]:
    """Draw x ~ N(0,1); the instance is e^{i x tau omega} exp(-i x tau H)."""
    x = float(rng.standard_normal())
    t = x * g.tau
    return Evolution(h, t, phase=complex(np.exp(1j * t * g.omega))), x


def gaussian_filter_matrix(h: Hamiltonian, tau: float, omega: float) -> np.ndarray:
    """Dense filter oracle exp(-tau^2 (H - omega)^2 / 2) by eigendecomposition."""
    evals, evecs = hamiltonian_eigensystem(h)
    return (evecs * np.exp(-0.5 * tau ** 2 * (evals - omega) ** 2)) @ evecs.conj().T


# --- formula dump (JSON-facing) ---

def formula_dump(f) -> dict:
    """JSON-ready description: {mu, terms: [{prob, phase: [re, im], word}]}."""
    if isinstance(f, LcuFormula):
        terms = []
        for t in f.terms:
            if not isinstance(t.op, PauliString):
                raise ValueError("only Pauli formulas have a word-based dump")
            ph = t.phase * t.op.phase
            terms.append({"prob": t.prob, "phase": [ph.real, ph.imag], "word": t.op.label})
        return {"kind": "pauli-lcu", "mu": f.mu, "terms": terms,
                "truncation_error": f.truncation_error}
    if isinstance(f, PairedLcuFormula):
        terms = []
        for t in f.terms:
            ph = t.left.phase
            terms.append({"prob": t.prob, "phase": [ph.real, ph.imag], "word": t.left.label,
                          "pair_weight": t.pair_weight})
        return {"kind": "paired-channel", "mu": f.mu, "terms": terms}
    if isinstance(f, GaussianFilterEnsemble):
        return {"kind": "gaussian-filter", "tau": f.tau, "omega": f.omega,
                "x_distribution": "standard-normal",
                "effective_filter": "exp(-tau^2 (H - omega)^2 / 2)"}
    raise TypeError(f"cannot dump formula of type {type(f).__name__}")
