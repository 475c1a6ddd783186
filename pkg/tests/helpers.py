"""Shared builders and brute-force oracles for the test suite."""

from __future__ import annotations

import itertools
from collections import deque

import numpy as np

from spatialqubo.instance import Assignment, Instance, heterogeneity


def random_connected_neighbors(rng: np.random.Generator, n: int, extra: int) -> tuple[tuple[int, ...], ...]:
    """Random spanning tree on ``n`` nodes plus up to ``extra`` random chords."""
    nbrs = [set() for _ in range(n)]
    order = rng.permutation(n)
    for t in range(1, n):
        a, b = int(order[t]), int(order[rng.integers(t)])
        nbrs[a].add(b)
        nbrs[b].add(a)
    for _ in range(extra):
        a, b = (int(v) for v in rng.integers(n, size=2))
        if a != b:
            nbrs[a].add(b)
            nbrs[b].add(a)
    return tuple(tuple(sorted(s)) for s in nbrs)


def random_instance(rng: np.random.Generator, n: int, p: int, extra: int | None = None) -> Instance:
    extra = n // 2 if extra is None else extra
    nbrs = random_connected_neighbors(rng, n, extra)
    attrs = rng.uniform(0.0, 10.0, size=(n, 1))
    return Instance(tuple(str(i + 1) for i in range(n)), nbrs, attrs, p)


def bfs_connected(neighbors, nodes) -> bool:
    nodes = set(nodes)
    if not nodes:
        return False
    start = min(nodes)
    seen, queue = {start}, deque([start])
    while queue:
        v = queue.popleft()
        for w in neighbors[v]:
            if w in nodes and w not in seen:
                seen.add(w)
                queue.append(w)
    return seen == nodes


def count_components(neighbors, nodes) -> int:
    nodes, count = set(nodes), 0
    while nodes:
        start = min(nodes)
        seen, queue = {start}, deque([start])
        while queue:
            v = queue.popleft()
            for w in neighbors[v]:
                if w in nodes and w not in seen:
                    seen.add(w)
                    queue.append(w)
        nodes -= seen
        count += 1
    return count


def brute_articulation(neighbors, nodes) -> set[int]:
    """Cut vertices: deleting them raises the number of components."""
    nodes = set(nodes)
    base = count_components(neighbors, nodes)
    return {v for v in nodes if count_components(neighbors, nodes - {v}) > base}


def all_labelings(n: int, p: int):
    for labels in itertools.product(range(1, p + 1), repeat=n):
        yield Assignment(list(labels))


def proper_labelings(n: int, p: int):
    """Labelings that use every region at least once."""
    for a in all_labelings(n, p):
        if len(set(a.labels)) == p:
            yield a


def contiguous_labelings(instance: Instance):
    for a in proper_labelings(instance.n, instance.p):
        if all(bfs_connected(instance.neighbors, a.region(k)) for k in range(1, instance.p + 1)):
            yield a


def brute_force_optimum(instance: Instance) -> tuple[float, list[Assignment]]:
    """Smallest heterogeneity over contiguous labelings and every labeling attaining it."""
    best, arg = np.inf, []
    for a in contiguous_labelings(instance):
        h = heterogeneity(instance, a)
        if h < best - 1e-12:
            best, arg = h, [a]
        elif abs(h - best) <= 1e-12:
            arg.append(a)
    return best, arg


def same_partition(a: Assignment, b: Assignment) -> bool:
    """Equal up to renaming the regions."""
    blocks = lambda x: sorted(tuple(x.region(k)) for k in set(x.labels))  # noqa: E731
    return blocks(a) == blocks(b)
