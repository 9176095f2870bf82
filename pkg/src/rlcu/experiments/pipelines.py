"""Reusable sampled pipelines: each one runs a circuit family shot by shot,
collects randomized-measurement records into a columnar SnapshotBatch, and
attaches the estimator weights and normalisation factors of that family.

Shot functions are top level so worker processes can receive them; all
randomness comes from the (seed, shot index) stream.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..backend import Evolution, StateVector
from ..circuits import (
    CircuitInstance,
    estimator_weight_composite,
    estimator_weight_single,
    run_always_on,
    run_instrument,
)
from ..formulas import LcuFormula, PairedLcuFormula, sample_instance
from ..shadows import SnapshotBatch, sample_shadow_arrays
from .runner import map_shots, shot_rng


# --- single-segment interference pipeline (randomized or fixed b) ---

@dataclass(frozen=True, eq=False)
class _UnphysicalPayload:
    u: object
    v: object
    psi0: StateVector
    randomize_b: bool


def _unphysical_shots(payload: _UnphysicalPayload, seed: int, start: int, stop: int):
    m = stop - start
    n = payload.psi0.n
    bases = np.empty((m, n), dtype=np.uint8)
    zbits = np.empty((m, n), dtype=np.uint8)
    weights = np.empty(m, dtype=complex)
    inst = CircuitInstance(((payload.u, payload.v),), payload.psi0)
    for i in range(m):
        rng = shot_rng(seed, start + i)
        b = int(rng.integers(2)) if payload.randomize_b else 0
        rec, out = run_always_on(inst, b, rng)
        if payload.randomize_b:
            weights[i] = estimator_weight_single(rec)
        else:
            weights[i] = (-1.0) ** rec.a[0]
        bases[i], zbits[i] = sample_shadow_arrays(out.amplitudes, n, rng)
    return bases, zbits, weights


def run_unphysical_pipeline(u, v, psi0: StateVector, shots: int, seed: int,
                            workers: int = 1, randomize_b: bool = True) -> SnapshotBatch:
    """Single-segment circuit with shadow readout. With randomize_b the
    weights are 2 i^b (-1)^a and the batch mean reconstructs U rho V^dag;
    with b fixed at 0 the weights are (-1)^a and the mean reconstructs the
    symmetrised combination (U rho V^dag + V rho U^dag) / 2."""
    payload = _UnphysicalPayload(u, v, psi0, randomize_b)
    bases, zbits, weights = map_shots(_unphysical_shots, payload, shots, seed, workers)
    return SnapshotBatch(bases, zbits, weights, np.ones(shots))


# --- composite pipeline: sampled chains through instrument / kept-ancilla circuits ---

@dataclass(frozen=True, eq=False)
class _CompositePayload:
    formula: LcuFormula
    nu: int
    psi0: StateVector
    u_s: np.ndarray | None
    variant: str          # instrument | always-on | common-unitary
    correlated: bool


def _composite_shots(payload: _CompositePayload, seed: int, start: int, stop: int):
    m = stop - start
    n = payload.psi0.n
    f, nu = payload.formula, payload.nu
    bases = np.empty((m, n), dtype=np.uint8)
    zbits = np.empty((m, n), dtype=np.uint8)
    weights = np.empty(m, dtype=complex)
    fold = payload.variant == "always-on" and payload.u_s is not None
    for i in range(m):
        rng = shot_rng(seed, start + i)
        terms_u = [sample_instance(f, rng) for _ in range(nu)]
        if payload.correlated:
            terms_v = terms_u
        else:
            terms_v = [sample_instance(f, rng) for _ in range(nu)]
        if fold:
            # fold the common unitary into the controlled pair
            pairs = tuple((tu.matrix(n) @ payload.u_s, tv.matrix(n) @ payload.u_s)
                          for tu, tv in zip(terms_u, terms_v))
            common = None
        else:
            pairs = tuple(zip(terms_u, terms_v))
            common = payload.u_s
        inst = CircuitInstance(pairs, payload.psi0, common)
        if payload.variant == "instrument":
            rec, out = run_instrument(inst, (0,) * nu, rng)
            weights[i] = estimator_weight_composite(rec)
        else:
            rec, out = run_always_on(inst, 0, rng)
            weights[i] = (-1.0) ** rec.a[0]
        bases[i], zbits[i] = sample_shadow_arrays(out.amplitudes, n, rng)
    return bases, zbits, weights


def run_composite_pipeline(formula: LcuFormula, nu: int, psi0: StateVector, shots: int,
                           seed: int, workers: int = 1, u_s: np.ndarray | None = None,
                           variant: str = "instrument", correlated: bool = False,
                           ) -> tuple[SnapshotBatch, float]:
    """Independently sampled u- and v-chains over nu segments; the batch norms
    carry mu_T^2, so the weighted mean reconstructs (target)^nu rho (target^nu)^dag."""
    payload = _CompositePayload(formula, nu, psi0, u_s, variant, correlated)
    bases, zbits, weights = map_shots(_composite_shots, payload, shots, seed, workers)
    mu_t = formula.mu ** nu
    return SnapshotBatch(bases, zbits, weights, np.full(shots, mu_t ** 2)), mu_t


# --- paired-term channel pipeline ---

@dataclass(frozen=True, eq=False)
class _PairedPayload:
    formula: PairedLcuFormula
    nu: int
    psi0: StateVector
    u_s: np.ndarray | None


def _paired_shots(payload: _PairedPayload, seed: int, start: int, stop: int):
    m = stop - start
    n = payload.psi0.n
    f, nu = payload.formula, payload.nu
    identity = f.terms[0].left
    bases = np.empty((m, n), dtype=np.uint8)
    zbits = np.empty((m, n), dtype=np.uint8)
    weights = np.empty(m, dtype=complex)
    factors = np.empty(m, dtype=float)
    for i in range(m):
        rng = shot_rng(seed, start + i)
        terms = [f.sample(rng) for _ in range(nu)]
        pairs = tuple((t.left, identity) for t in terms)
        inst = CircuitInstance(pairs, payload.psi0, payload.u_s)
        rec, out = run_instrument(inst, (0,) * nu, rng)
        weights[i] = estimator_weight_composite(rec)
        factors[i] = float(np.prod([t.pair_weight for t in terms]))
        bases[i], zbits[i] = sample_shadow_arrays(out.amplitudes, n, rng)
    return bases, zbits, weights, factors


def run_paired_pipeline(formula: PairedLcuFormula, nu: int, psi0: StateVector, shots: int,
                        seed: int, workers: int = 1, u_s: np.ndarray | None = None,
                        ) -> tuple[SnapshotBatch, float]:
    """Channel-decomposition sampling: one term per segment, the controlled
    pair is (term, identity), and the batch norm is mu^nu times the per-shot
    pair factors (2 per non-identity draw)."""
    payload = _PairedPayload(formula, nu, psi0, u_s)
    bases, zbits, weights, factors = map_shots(_paired_shots, payload, shots, seed, workers)
    mu_t = formula.mu ** nu
    return SnapshotBatch(bases, zbits, weights, mu_t * factors), mu_t


# --- spectral-filter pipeline ---

@dataclass(frozen=True, eq=False)
class _FilterPayload:
    h: object
    tau: float
    omega: float
    psi0: StateVector


def _filter_shots(payload: _FilterPayload, seed: int, start: int, stop: int):
    m = stop - start
    n = payload.psi0.n
    tau, omega = payload.tau, payload.omega
    bases = np.empty((m, n), dtype=np.uint8)
    zbits = np.empty((m, n), dtype=np.uint8)
    weights = np.empty(m, dtype=complex)
    for i in range(m):
        rng = shot_rng(seed, start + i)
        x1 = float(rng.standard_normal())
        x2 = float(rng.standard_normal())
        u = Evolution(payload.h, x1 * tau, phase=complex(np.exp(1j * x1 * tau * omega)))
        v = Evolution(payload.h, x2 * tau, phase=complex(np.exp(1j * x2 * tau * omega)))
        inst = CircuitInstance(((u, v),), payload.psi0)
        rec, out = run_always_on(inst, 0, rng)
        weights[i] = (-1.0) ** rec.a[0]
        bases[i], zbits[i] = sample_shadow_arrays(out.amplitudes, n, rng)
    return bases, zbits, weights


def run_filter_pipeline(h, tau: float, omega: float, psi0: StateVector, shots: int,
                        seed: int, workers: int = 1) -> SnapshotBatch:
    """Gaussian ensemble of phased time evolutions through the single-segment
    circuit with b = 0; the weighted snapshot mean reconstructs the filtered
    pure state g |psi0><psi0| g with g = exp(-tau^2 (H - omega)^2 / 2)."""
    payload = _FilterPayload(h, tau, omega, psi0)
    bases, zbits, weights = map_shots(_filter_shots, payload, shots, seed, workers)
    return SnapshotBatch(bases, zbits, weights, np.ones(shots))
