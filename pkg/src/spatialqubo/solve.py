"""Classical samplers for :class:`~spatialqubo.qubo.QuboModel`.

``solve_exact`` enumerates every bit vector (small models only) and is the
oracle for ``solve_sa``, a single-flip Metropolis annealer with
incremental local fields compiled by numba.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .qubo import QuboModel, all_bitvectors, evaluate_qubo

__all__ = ["SampleResult", "SAParams", "solve_exact", "solve_sa", "geometric_betas", "restart_seed"]


@dataclass
class SampleResult:
    bits: np.ndarray
    energy: float
    restart_index: int = 0
    sweeps_used: int = 0

    def to_dict(self) -> dict:
        return {
            "energy": self.energy,
            "restart_index": self.restart_index,
            "sweeps_used": self.sweeps_used,
            "bits": rle_encode(self.bits),
        }


@dataclass(frozen=True)
class SAParams:
    restarts: int = 16
    sweeps: int = 1000
    beta_range: tuple[float, float] | None = None
    seed: int = 0
    workers: int = 1

    def to_dict(self) -> dict:
        return {
            "restarts": self.restarts,
            "sweeps": self.sweeps,
            "beta_range": None if self.beta_range is None else list(self.beta_range),
            "seed": self.seed,
            "workers": self.workers,
        }


def rle_encode(bits) -> list[list[int]]:
    """``[[value, run length], ...]``."""
    out: list[list[int]] = []
    for b in np.asarray(bits).astype(int).tolist():
        if out and out[-1][0] == b:
            out[-1][1] += 1
        else:
            out.append([b, 1])
    return out


def rle_decode(runs) -> np.ndarray:
    return np.array([v for v, n in runs for _ in range(n)], dtype=np.int8)


def solve_exact(model: QuboModel, max_vars: int = 24) -> SampleResult:
    """Global minimum by enumeration; ties go to the lexicographically smallest vector."""
    if model.num_vars > max_vars:
        raise ValueError(f"{model.num_vars} variables exceed exhaustive limit {max_vars}")
    if model.num_vars == 0:
        return SampleResult(np.zeros(0, dtype=np.int8), float(model.offset))
    best_e, best = math.inf, None
    for chunk in all_bitvectors(model.num_vars):
        e = model.energies(chunk)
        idx = int(np.argmin(e))
        # strict improvement keeps the earliest (lexicographically smallest) minimizer
        if e[idx] < best_e - 1e-9:
            best_e, best = float(e[idx]), chunk[idx].copy()
    return SampleResult(best, evaluate_qubo(model, best))


def geometric_betas(model: QuboModel, sweeps: int, beta_range=None) -> np.ndarray:
    """Inverse temperatures from ``0.1/mean|c|`` to ``10/min|c|`` unless given."""
    if beta_range is None:
        mean, smallest = model.coefficient_scale()
        if mean == 0:
            return np.ones(sweeps)
        beta_range = (0.1 / mean, 10.0 / smallest)
    b0, b1 = beta_range
    if b0 <= 0 or b1 < b0:
        raise ValueError("beta schedule must be positive and nondecreasing")
    return np.geomspace(b0, b1, sweeps)


def restart_seed(seed: int, restart: int) -> int:
    return int(np.random.SeedSequence([seed, restart]).generate_state(1, np.uint32)[0])


@njit(cache=True, nogil=True)
def _anneal(linear, indptr, indices, data, betas, seed, initial):
    np.random.seed(seed)
    n = linear.shape[0]
    x = np.zeros(n, dtype=np.int8)
    for i in range(n):
        r = np.random.random()
        if initial.shape[0] == n:
            x[i] = initial[i]
        else:
            x[i] = 1 if r < 0.5 else 0
    field = linear.copy()
    energy = 0.0
    for i in range(n):
        if x[i]:
            energy += linear[i]
            for t in range(indptr[i], indptr[i + 1]):
                j = indices[t]
                field[j] += data[t]
                if j < i and x[j]:
                    energy += data[t]
    best = x.copy()
    best_energy = energy
    order = np.arange(n)
    for s in range(betas.shape[0]):
        beta = betas[s]
        np.random.shuffle(order)
        for t in range(n):
            i = order[t]
            delta = field[i] if x[i] == 0 else -field[i]
            if delta <= 0.0 or np.random.random() < np.exp(-beta * delta):
                sign = 1.0 if x[i] == 0 else -1.0
                x[i] = 1 - x[i]
                energy += delta
                for q in range(indptr[i], indptr[i + 1]):
                    field[indices[q]] += sign * data[q]
                if energy < best_energy:
                    best_energy = energy
                    best[:] = x
    return best, best_energy


def _run_restart(model: QuboModel, betas: np.ndarray, seed: int, r: int, initial: np.ndarray) -> SampleResult:
    indptr, indices, data = model.adjacency
    bits, _ = _anneal(model.linear, indptr, indices, data, betas, restart_seed(seed, r), initial)
    return SampleResult(bits, evaluate_qubo(model, bits), r, len(betas))


def solve_sa(
    model: QuboModel,
    params: SAParams | None = None,
    return_all: bool = False,
    initial=None,
    **kwargs,
):
    """Multi-restart simulated annealing; returns the best sample (and all of them).

    Restart ``r`` draws its own stream seeded from ``(seed, r)``, so results do
    not depend on ``workers``. Every restart starts from uniform random bits
    unless ``initial`` is given. Reported energies come from a full evaluation.
    """
    if params is None:
        params = SAParams(**kwargs)
    elif kwargs:
        raise TypeError("pass either params or keyword arguments")
    if params.restarts < 1 or params.sweeps < 1:
        raise ValueError("restarts and sweeps must be positive")
    if model.num_vars == 0:
        best = SampleResult(np.zeros(0, dtype=np.int8), float(model.offset))
        return (best, [best]) if return_all else best
    betas = geometric_betas(model, params.sweeps, params.beta_range)
    start = np.zeros(0, dtype=np.int8) if initial is None else np.asarray(initial, dtype=np.int8)
    if initial is not None and start.shape != (model.num_vars,):
        raise ValueError("initial state has the wrong length")
    runs = range(params.restarts)
    if params.workers > 1:
        with ThreadPoolExecutor(params.workers) as pool:
            samples = list(pool.map(lambda r: _run_restart(model, betas, params.seed, r, start), runs))
    else:
        samples = [_run_restart(model, betas, params.seed, r, start) for r in runs]
    best = min(samples, key=lambda s: (s.energy, s.restart_index))
    return (best, samples) if return_all else best
