"""Seeding-based pipeline for instances too large for one monolithic model.

seed selection -> region growing -> repeat {movable areas -> boundary QUBO ->
anneal -> apply moves -> repair contiguity -> accept if better}.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .dqm import PenaltyConfig, Seeds
from .instance import Assignment, Instance, heterogeneity
from .qubo import QuboBuilder, QuboModel
from .solve import SAParams, solve_sa
from .verify import articulation_points, check_contiguity

__all__ = [
    "NoMovableAreas",
    "PipelineState",
    "hop_distances",
    "select_seeds",
    "grow_regions",
    "movable_areas",
    "build_boundary_qubo",
    "decode_boundary",
    "run_pipeline",
]

log = logging.getLogger(__name__)


class NoMovableAreas(ValueError):
    """No area can be reassigned: the refinement has converged."""


@dataclass
class PipelineState:
    assignment: Assignment
    seeds: Seeds
    objective: float
    iteration: int = 0
    initial_objective: float = 0.0
    history: list[dict] = field(default_factory=list)
    seeding: dict = field(default_factory=dict)

    def to_dict(self, instance: Instance | None = None) -> dict:
        """JSON-ready state; roots are area ids when ``instance`` is given, else indices."""
        name = (lambda r: instance.names[r]) if instance is not None else (lambda r: r)
        doc = {
            "labels": list(self.assignment.labels),
            "roots": {str(k): name(r) for k, r in self.seeds.roots.items()},
            "objective": self.objective,
            "initial_objective": self.initial_objective,
            "iterations": self.iteration,
            "history": self.history,
            "seeding": self.seeding,
        }
        if instance is not None:
            doc["area_ids"] = list(instance.names)
        return doc


def hop_distances(instance: Instance) -> np.ndarray:
    rows = [i for i, j in instance.edges]
    cols = [j for i, j in instance.edges]
    graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(instance.n, instance.n))
    return shortest_path(graph, unweighted=True, directed=False)


def _greedy_maxmin(dist: np.ndarray, p: int) -> list[int]:
    ecc = dist.max(axis=1)
    chosen = [int(np.flatnonzero(ecc == ecc.max())[0])]
    nearest = dist[chosen[0]].copy()
    while len(chosen) < p:
        nearest[chosen] = -1
        nxt = int(np.argmax(nearest))  # argmax returns the lowest index among ties
        chosen.append(nxt)
        nearest = np.minimum(nearest, dist[nxt])
    return chosen


def _dispersion_qubo(dist: np.ndarray, p: int, threshold: float) -> QuboModel:
    n = dist.shape[0]
    b = QuboBuilder(n)
    b.add_square(1.0, [(i, 1.0) for i in range(n)], -float(p))
    for i in range(n):
        for j in range(i + 1, n):
            if dist[i, j] < threshold:
                b.add_quadratic(i, j, 1.0)
    return b.build(meta={"form": "dispersion", "threshold": threshold})


def select_seeds(
    instance: Instance,
    p: int | None = None,
    strategy: str = "greedy-maxmin",
    sa: SAParams | None = None,
) -> Seeds:
    """Spread ``p`` roots apart in graph hop distance.

    ``greedy-maxmin`` is farthest-point traversal starting from the lowest
    index among maximum-eccentricity areas. ``qubo-dispersion`` bisects on a
    distance threshold, annealing a cardinality-plus-conflict QUBO at each
    step; it falls back to greedy if no threshold yields a feasible set.
    """
    p = instance.p if p is None else p
    if not 1 <= p <= instance.n:
        raise ValueError(f"p={p} out of range")
    dist = hop_distances(instance)
    greedy = _greedy_maxmin(dist, p)
    if strategy in ("greedy", "greedy-maxmin"):
        return Seeds.from_list(greedy)
    if strategy not in ("qubo", "qubo-dispersion"):
        raise ValueError(f"unknown seeding strategy {strategy!r}")
    sa = sa or SAParams(restarts=4, sweeps=300)
    levels = np.unique(dist[np.triu_indices(instance.n, 1)])
    best = None
    lo, hi = 0, len(levels) - 1
    while lo <= hi:
        mid = (lo + hi) // 2
        T = float(levels[mid])
        sample = solve_sa(_dispersion_qubo(dist, p, T), sa)
        picked = np.flatnonzero(sample.bits)
        ok = len(picked) == p and all(dist[i, j] >= T for a, i in enumerate(picked) for j in picked[a + 1 :])
        if ok:
            best = [int(i) for i in picked]
            lo = mid + 1
        else:
            hi = mid - 1
    if best is None or (p > 1 and _min_pair(dist, best) < _min_pair(dist, greedy)):
        log.info("dispersion QUBO did not beat greedy seeding; using greedy")
        return Seeds.from_list(greedy)
    return Seeds.from_list(best)


def _min_pair(dist, areas) -> float:
    return min(dist[i, j] for a, i in enumerate(areas) for j in areas[a + 1 :])


def grow_regions(instance: Instance, seeds: Seeds) -> Assignment:
    """Grow all regions from their seeds by cheapest adjacent insertion.

    Each step assigns the (unassigned area, adjacent region) pair with the
    smallest heterogeneity increase, breaking ties by lower region then
    lower area index.
    """
    seeds.validate(instance)
    n, p = instance.n, instance.p
    w = instance.weights
    labels = np.zeros(n, dtype=int)
    cost = np.zeros((n, p))
    touches = np.zeros((n, p), dtype=bool)
    adj = [list(nb) for nb in instance.neighbors]

    def add(i, k):
        labels[i] = k
        cost[:, k - 1] += w[:, i]
        touches[adj[i], k - 1] = True

    for k, r in seeds.roots.items():
        add(r, k)
    for _ in range(n - p):
        cand = touches & (labels == 0)[:, None]
        score = np.where(cand, cost, np.inf)
        best = score.min()
        ii, kk = np.nonzero(score == best)
        # prefer lower region, then lower area
        pick = np.lexsort((ii, kk))[0]
        add(int(ii[pick]), int(kk[pick]) + 1)
    return Assignment(labels.tolist())


def movable_areas(instance: Instance, assignment: Assignment, seeds: Seeds) -> dict[int, list[int]]:
    """Areas that can switch region alone without splitting either side.

    An area qualifies when it borders another region, is not an articulation
    area or the only area of its region, and is not a root. Values are the
    adjacent regions it could join.
    """
    report = check_contiguity(instance, assignment)
    if not report.ok:
        raise ValueError(f"regions {report.disconnected_regions()} are not contiguous")
    cut = set()
    for k in range(1, instance.p + 1):
        cut |= articulation_points(instance.neighbors, assignment.region(k))
    sizes = {k: len(assignment.region(k)) for k in range(1, instance.p + 1)}
    out = {}
    for i in range(instance.n):
        own = assignment[i]
        targets = sorted({assignment[j] for j in instance.neighbors[i]} - {own})
        if targets and i not in cut and sizes[own] > 1 and i not in seeds:
            out[i] = targets
    return out


def build_boundary_qubo(
    instance: Instance,
    assignment: Assignment,
    movables: dict[int, list[int]],
    config: PenaltyConfig | None = None,
) -> tuple[QuboModel, list[tuple[int, int]]]:
    """One-hot reassignment model over the movable areas only.

    Bits are ``(area, region)`` pairs over the area's current region and its
    candidates. For one-hot samples the energy equals the heterogeneity of
    the resulting labeling.
    """
    if not movables:
        raise NoMovableAreas("no movable areas")
    w = instance.weights
    bits = []
    for i in sorted(movables):
        for k in sorted({assignment[i], *movables[i]}):
            bits.append((i, k))
    where = {b: t for t, b in enumerate(bits)}
    mov = set(movables)
    fixed = [j for j in range(instance.n) if j not in mov]
    b = QuboBuilder(len(bits))
    fixed_labels = np.array([assignment[j] for j in fixed])
    fw = w[np.ix_(fixed, fixed)]
    b.offset += float(np.triu(fw * (fixed_labels[:, None] == fixed_labels[None, :]), 1).sum())
    for t, (i, k) in enumerate(bits):
        b.add_linear(t, float(sum(w[i, j] for j in fixed if assignment[j] == k)))
    for s, (i, k) in enumerate(bits):
        for t in range(s + 1, len(bits)):
            j, kk = bits[t]
            if kk == k and j != i and w[i, j]:
                b.add_quadratic(s, t, w[i, j])
    # Every coefficient is nonnegative, so clearing bit t saves at most its
    # linear term plus its couplings. A one-hot strength above that, taken
    # per area, keeps every minimizer one-hot with the lowest barriers.
    saving = b.linear.copy()
    for (s, t), c in b.quadratic.items():
        saving[s] += c
        saving[t] += c
    strengths = {}
    for i in sorted(movables):
        own = [(where[i, k], 1.0) for k in sorted({assignment[i], *movables[i]})]
        lam = config.lambda1 if config is not None else 1.0 + max(saving[t] for t, _ in own)
        strengths[i] = lam
        b.add_square(lam, own, -1.0)
    meta = {"form": "boundary", "onehot_strength": {str(i): v for i, v in strengths.items()}}
    if config is not None:
        meta["config"] = config.to_dict()
    return b.build(meta=meta), bits


def decode_boundary(bits_map, sample_bits, assignment: Assignment) -> dict[int, int]:
    """Region changes requested by a boundary sample (lowest set region wins)."""
    chosen: dict[int, int] = {}
    for t, (i, k) in enumerate(bits_map):
        if sample_bits[t] and i not in chosen:
            chosen[i] = k
    return {i: k for i, k in chosen.items() if k != assignment[i]}


def _repair(instance: Instance, base: Assignment, moves: dict[int, int]) -> tuple[Assignment, list[int]]:
    """Revert moves, least useful first, until every region is contiguous."""
    moves = dict(moves)
    reverted = []
    while True:
        current = base.relabel(moves)
        if check_contiguity(instance, current).ok:
            return current, reverted
        obj = heterogeneity(instance, current)
        gains = []
        for i in sorted(moves):
            without = {a: k for a, k in moves.items() if a != i}
            gains.append((heterogeneity(instance, base.relabel(without)) - obj, i))
        _, worst = min(gains)
        del moves[worst]
        reverted.append(worst)


def run_pipeline(
    instance: Instance,
    p: int | None = None,
    config: PenaltyConfig | None = None,
    max_iters: int = 20,
    sa: SAParams | None = None,
    seed_strategy: str = "greedy-maxmin",
) -> PipelineState:
    if p is not None and p != instance.p:
        instance = instance.with_p(p)
    sa = sa or SAParams(restarts=8, sweeps=1000)
    seeds = select_seeds(instance, instance.p, seed_strategy, sa)
    assignment = grow_regions(instance, seeds)
    objective = heterogeneity(instance, assignment)
    state = PipelineState(assignment, seeds, objective, 0, objective)
    state.seeding = {"phase": "seeding", "strategy": seed_strategy, "sampler": "sa" if seed_strategy == "qubo" else None}

    for it in range(1, max_iters + 1):
        movables = movable_areas(instance, state.assignment, seeds)
        if not movables:
            break
        model, bits_map = build_boundary_qubo(instance, state.assignment, movables, config)
        params = SAParams(sa.restarts, sa.sweeps, sa.beta_range, sa.seed + it, sa.workers)
        sample = solve_sa(model, params)
        moves = decode_boundary(bits_map, sample.bits, state.assignment)
        candidate, reverted = _repair(instance, state.assignment, moves)
        new_obj = heterogeneity(instance, candidate)
        accepted = new_obj < state.objective - 1e-12
        state.history.append(
            {
                "iteration": it,
                "objective": new_obj if accepted else state.objective,
                "candidate_objective": new_obj,
                "movable": len(movables),
                "bits": model.num_vars,
                "moves_applied": len(moves) - len(reverted),
                "moves_reverted": len(reverted),
                "accepted": accepted,
                "phase": "boundary",
                "sampler": "sa",
            }
        )
        if not accepted:
            break
        state.assignment, state.objective, state.iteration = candidate, new_obj, it
        log.debug("iteration %d objective %.6g", it, new_obj)
    return state
