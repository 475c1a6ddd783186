"""Model-independent oracles: contiguity, flow completion, articulation areas.

Nothing here looks at a compiled DQM or QUBO. These functions are the ground
truth the quadratic models are tested against.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .dqm import Seeds
from .instance import Assignment, Instance

__all__ = [
    "FlowConfig",
    "ContiguityReport",
    "Theorem1Verdict",
    "check_contiguity",
    "complete_flows",
    "conservation_targets",
    "theorem1_harness",
    "articulation_areas",
    "articulation_points",
    "connected_components",
]


@dataclass(frozen=True)
class FlowConfig:
    """Nonnegative integer flow per directed edge; missing edges carry 0."""

    flows: dict[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        for e, v in self.flows.items():
            if v < 0:
                raise ValueError(f"negative flow on edge {e}")

    def __getitem__(self, edge):
        return self.flows.get(tuple(edge), 0)

    def net_inflow(self, instance: Instance, i: int) -> int:
        return sum(self[j, i] - self[i, j] for j in instance.neighbors[i])

    def max_flow(self) -> int:
        return max(self.flows.values(), default=0)

    def validate(self, instance: Instance, M: int | None = None) -> None:
        edges = set(instance.edges)
        for e, v in self.flows.items():
            if e not in edges and v:
                raise ValueError(f"flow on non-adjacent pair {e}")
            if M is not None and v > M:
                raise ValueError(f"flow {v} on {e} exceeds bound {M}")


@dataclass
class ContiguityReport:
    connected: dict[int, bool]
    components: dict[int, list[list[int]]]

    @property
    def ok(self) -> bool:
        return all(self.connected.values())

    def disconnected_regions(self) -> list[int]:
        return [k for k, ok in self.connected.items() if not ok]


def connected_components(neighbors, nodes: Iterable[int]) -> list[list[int]]:
    """Components of the subgraph induced by ``nodes``, each sorted, ordered by min id."""
    nodes = set(nodes)
    comps = []
    for s in sorted(nodes):
        if any(s in c for c in comps):
            continue
        comp = {s}
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for w in neighbors[v]:
                if w in nodes and w not in comp:
                    comp.add(w)
                    queue.append(w)
        comps.append(sorted(comp))
    return comps


def check_contiguity(instance: Instance, assignment: Assignment) -> ContiguityReport:
    """Per-region connectivity of the induced subgraphs; empty regions fail."""
    connected, components = {}, {}
    for k in range(1, instance.p + 1):
        comps = connected_components(instance.neighbors, assignment.region(k))
        components[k] = comps
        connected[k] = len(comps) == 1
    return ContiguityReport(connected, components)


def conservation_targets(instance: Instance, assignment: Assignment, seeds: Seeds) -> list[int]:
    """Required net inflow per area: 1 for non-roots, ``1 - |region|`` for roots."""
    sizes = {k: len(assignment.region(k)) for k in range(1, instance.p + 1)}
    targets = [1] * instance.n
    for k, r in seeds.roots.items():
        targets[r] = 1 - sizes[k]
    return targets


def _check_roots(assignment: Assignment, seeds: Seeds) -> None:
    for k, r in seeds.roots.items():
        if assignment[r] != k:
            raise ValueError(f"root area {r} of region {k} is labeled {assignment[r]}")


def complete_flows(instance: Instance, assignment: Assignment, seeds: Seeds) -> FlowConfig | None:
    """Spanning-tree flows certifying contiguity, or ``None`` if some region is split.

    Each region gets a BFS tree from its root (neighbors visited in ascending
    id order); the edge from parent to child carries the child's subtree size.
    """
    _check_roots(assignment, seeds)
    flows = {}
    for k, root in sorted(seeds.roots.items()):
        members = set(assignment.region(k))
        parent = {root: None}
        order = [root]
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w in sorted(instance.neighbors[v]):
                if w in members and w not in parent:
                    parent[w] = v
                    order.append(w)
                    queue.append(w)
        if len(order) != len(members):
            return None
        size = dict.fromkeys(order, 1)
        for v in reversed(order[1:]):
            size[parent[v]] += size[v]
            flows[parent[v], v] = size[v]
    return FlowConfig(flows)


@dataclass
class Theorem1Verdict:
    contiguous: bool
    zero_penalty_flow: bool | None  # None: randomized search ran out of budget
    witness: FlowConfig | None = None
    nodes_explored: int = 0

    @property
    def inconclusive(self) -> bool:
        return self.zero_penalty_flow is None

    @property
    def consistent(self) -> bool:
        return self.zero_penalty_flow is not None and self.zero_penalty_flow == self.contiguous


def theorem1_harness(
    instance: Instance,
    assignment: Assignment,
    seeds: Seeds,
    M: int = 3,
    mode: str = "exhaustive",
    budget: int = 100_000,
    seed: int = 0,
) -> Theorem1Verdict:
    """Search flows in ``0..M`` for a configuration with zero constraint violation.

    Zero violation means every cross-region edge carries no flow and every
    area meets its conservation target. The verdict is consistent when such a
    flow exists exactly for contiguous labelings. ``exhaustive`` is a pruned
    backtracking search over all intra-region edges; ``randomized`` samples
    ``budget`` random flow vectors and reports inconclusive if none works.
    """
    _check_roots(assignment, seeds)
    contiguous = check_contiguity(instance, assignment).ok
    targets = conservation_targets(instance, assignment, seeds)
    edges = [(i, j) for i, j in instance.edges if assignment[i] == assignment[j]]

    if mode == "randomized":
        rng = random.Random(seed)
        for t in range(budget):
            flows = {e: rng.randint(0, M) for e in edges}
            fc = FlowConfig(flows)
            if all(fc.net_inflow(instance, i) == targets[i] for i in range(instance.n)):
                return Theorem1Verdict(contiguous, True, fc, t + 1)
        return Theorem1Verdict(contiguous, None, None, budget)
    if mode != "exhaustive":
        raise ValueError(f"unknown mode {mode!r}")

    # order edges so each area's incident edges finish as early as possible
    edges.sort(key=lambda e: (max(e), e))
    remaining_in = [0] * instance.n
    remaining_out = [0] * instance.n
    for i, j in edges:
        remaining_out[i] += 1
        remaining_in[j] += 1
    net = [0] * instance.n
    for i in range(instance.n):
        # areas with no intra-region edge are decided up front
        if remaining_in[i] == remaining_out[i] == 0 and targets[i] != 0:
            return Theorem1Verdict(contiguous, False, None, 0)
    values = [0] * len(edges)
    explored = 0

    def feasible(v):
        lo = net[v] - M * remaining_out[v]
        hi = net[v] + M * remaining_in[v]
        return lo <= targets[v] <= hi

    def search(pos):
        nonlocal explored
        explored += 1
        if pos == len(edges):
            return True
        i, j = edges[pos]
        remaining_out[i] -= 1
        remaining_in[j] -= 1
        for f in range(M + 1):
            net[i] -= f
            net[j] += f
            if feasible(i) and feasible(j):
                values[pos] = f
                if search(pos + 1):
                    return True
            net[i] += f
            net[j] -= f
        remaining_out[i] += 1
        remaining_in[j] += 1
        return False

    found = search(0)
    witness = FlowConfig({e: v for e, v in zip(edges, values) if v}) if found else None
    return Theorem1Verdict(contiguous, found, witness, explored)


def articulation_points(neighbors, nodes: Iterable[int]) -> set[int]:
    """Cut vertices of the subgraph induced by ``nodes`` (iterative Tarjan lowlink)."""
    nodes = set(nodes)
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    cut = set()
    counter = 0
    for root in sorted(nodes):
        if root in disc:
            continue
        disc[root] = low[root] = counter
        counter += 1
        root_children = 0
        stack = [(root, None, iter(sorted(neighbors[root])))]
        while stack:
            v, parent, it = stack[-1]
            advanced = False
            for w in it:
                if w not in nodes or w == parent:
                    continue
                if w in disc:
                    low[v] = min(low[v], disc[w])
                else:
                    disc[w] = low[w] = counter
                    counter += 1
                    stack.append((w, v, iter(sorted(neighbors[w]))))
                    advanced = True
                    break
            if advanced:
                continue
            stack.pop()
            if parent is not None:
                low[parent] = min(low[parent], low[v])
                if parent == root:
                    root_children += 1
                elif low[v] >= disc[parent]:
                    cut.add(parent)
        if root_children > 1:
            cut.add(root)
    return cut


def articulation_areas(instance: Instance, assignment: Assignment, region: int) -> set[int]:
    """Areas whose removal disconnects ``region``."""
    members = assignment.region(region)
    if not members:
        raise ValueError(f"region {region} is empty")
    if len(connected_components(instance.neighbors, members)) != 1:
        raise ValueError(f"region {region} is not connected")
    return articulation_points(instance.neighbors, members)
