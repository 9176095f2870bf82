"""Deterministic fan-out of Monte Carlo shots across worker processes.

Every shot owns an RNG stream keyed by (master seed, shot index), and chunk
results are concatenated in shot order, so the aggregate is bit-identical for
any worker count.
"""
from __future__ import annotations

import multiprocessing as mp

import numpy as np


def shot_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng((seed, index))


def _run_chunk(args):
    shot_fn, payload, seed, start, stop = args
    return shot_fn(payload, seed, start, stop)


def map_shots(shot_fn, payload, n_shots: int, seed: int, workers: int = 1) -> list:
    """Run ``shot_fn(payload, seed, start, stop)`` over [0, n_shots) split into
    contiguous chunks, one per worker. Each chunk returns a tuple of arrays;
    the tuples are concatenated columnwise in chunk order.

    ``shot_fn`` must be a top-level (picklable) function and must derive all
    randomness from shot_rng(seed, shot_index).
    """
    if n_shots < 1:
        raise ValueError(f"need at least one shot, got {n_shots}")
    workers = max(1, int(workers))
    bounds = np.linspace(0, n_shots, min(workers, n_shots) + 1).astype(int)
    tasks = [(shot_fn, payload, seed, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if len(tasks) == 1:
        chunks = [_run_chunk(tasks[0])]
    else:
        ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
        with ctx.Pool(processes=len(tasks)) as pool:
            chunks = pool.map(_run_chunk, tasks)
    first = chunks[0]
    return [np.concatenate([c[i] for c in chunks], axis=0) for i in range(len(first))]


def batch_standard_error(values: np.ndarray, k_batches: int) -> float:
    """Standard error of the mean from k contiguous batch means."""
    values = np.asarray(values, dtype=float)
    k = max(1, min(int(k_batches), values.size))
    means = np.array([chunk.mean() for chunk in np.array_split(values, k)])
    if k < 2:
        return float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return float(means.std(ddof=1) / np.sqrt(k))


def jackknife_ratio(num: np.ndarray, den: np.ndarray, k_batches: int) -> tuple[float, float]:
    """Delete-one-batch jackknife for a ratio of means over shared shots."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    k = max(2, min(int(k_batches), num.size))
    num_sums = np.array([c.sum() for c in np.array_split(num, k)])
    den_sums = np.array([c.sum() for c in np.array_split(den, k)])
    ratio = num_sums.sum() / den_sums.sum()
    loo = (num_sums.sum() - num_sums) / (den_sums.sum() - den_sums)
    se = float(np.sqrt((k - 1) / k * np.sum((loo - loo.mean()) ** 2)))
    return float(ratio), se
