"""Spatial regionalization instances: areas, adjacency, attributes, dissimilarity.

Areas are addressed by dense internal indices ``0..n-1``; the external ids
(``"1"``, ``"2"``, ... for generated grids) live in :attr:`Instance.names`.
Region labels are ``1..p`` throughout the package.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform

__all__ = [
    "InstanceError",
    "Instance",
    "Assignment",
    "load_instance",
    "instance_from_dict",
    "instance_to_dict",
    "save_instance",
    "generate_grid",
    "heterogeneity",
]

METRICS = {"l2": "euclidean", "l1": "cityblock"}


class InstanceError(ValueError):
    """Raised for malformed or invalid instance data."""


@dataclass(frozen=True, eq=False)
class Instance:
    names: tuple[str, ...]
    neighbors: tuple[tuple[int, ...], ...]
    attributes: np.ndarray
    p: int
    coordinates: np.ndarray | None = None
    metric: str = "l2"

    def __post_init__(self):
        n = len(self.names)
        if n == 0:
            raise InstanceError("instance has no areas")
        if len(set(self.names)) != n:
            dup = sorted({a for a in self.names if self.names.count(a) > 1})
            raise InstanceError(f"duplicate area id: {dup[0]}")
        attrs = np.asarray(self.attributes, dtype=float)
        if attrs.ndim == 1:
            attrs = attrs[:, None]
        if attrs.shape[0] != n or attrs.shape[1] < 1:
            raise InstanceError("attribute rows must match areas and have length >= 1")
        attrs.setflags(write=False)
        object.__setattr__(self, "attributes", attrs)
        if self.coordinates is not None:
            xy = np.asarray(self.coordinates, dtype=float)
            if xy.shape != (n, 2):
                raise InstanceError("coordinates must be one (x, y) pair per area")
            xy.setflags(write=False)
            object.__setattr__(self, "coordinates", xy)
        if self.metric not in METRICS:
            raise InstanceError(f"unknown metric {self.metric!r}")
        if len(self.neighbors) != n:
            raise InstanceError("neighbor lists must match areas")
        for i, nbrs in enumerate(self.neighbors):
            for j in nbrs:
                if j == i:
                    raise InstanceError(f"self adjacency at area {self.names[i]}")
                if i not in self.neighbors[j]:
                    raise InstanceError(
                        f"asymmetric adjacency: {self.names[i]} -> {self.names[j]}"
                    )
        if not 1 <= self.p <= n:
            raise InstanceError(f"p={self.p} out of range 1..{n}")
        if not _is_connected(self.neighbors, range(n)):
            raise InstanceError("disconnected adjacency graph")

    @property
    def n(self) -> int:
        return len(self.names)

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        """Directed edge set: both orientations of every adjacency, sorted."""
        return tuple(sorted((i, j) for i in range(self.n) for j in self.neighbors[i]))

    @cached_property
    def undirected_edges(self) -> tuple[tuple[int, int], ...]:
        return tuple((i, j) for i, j in self.edges if i < j)

    @cached_property
    def weights(self) -> np.ndarray:
        """Dense symmetric dissimilarity matrix with a zero diagonal."""
        if self.n == 1:
            w = np.zeros((1, 1))
        else:
            w = squareform(pdist(self.attributes, metric=METRICS[self.metric]))
        w.setflags(write=False)
        return w

    @cached_property
    def total_weight(self) -> float:
        return float(np.triu(self.weights, 1).sum())

    def index(self, name) -> int:
        try:
            return self.names.index(str(name))
        except ValueError:
            raise KeyError(f"unknown area id {name!r}") from None

    def with_p(self, p: int) -> Instance:
        return Instance(self.names, self.neighbors, self.attributes, p, self.coordinates, self.metric)


@dataclass(frozen=True)
class Assignment:
    """Region label ``1..p`` for every area (internal index order)."""

    labels: tuple[int, ...]
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(int(k) for k in self.labels))
        if any(k < 1 for k in self.labels):
            raise ValueError("region labels start at 1")

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, i):
        return self.labels[i]

    def region(self, k: int) -> list[int]:
        return [i for i, lab in enumerate(self.labels) if lab == k]

    def regions(self, p: int) -> list[list[int]]:
        return [self.region(k) for k in range(1, p + 1)]

    def relabel(self, moves: dict[int, int]) -> Assignment:
        labels = list(self.labels)
        for i, k in moves.items():
            labels[i] = k
        return Assignment(labels)


def _is_connected(neighbors, nodes) -> bool:
    nodes = set(nodes)
    if not nodes:
        return True
    start = next(iter(nodes))
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for w in neighbors[v]:
            if w in nodes and w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == len(nodes)


def instance_from_dict(doc: dict, metric: str = "l2") -> Instance:
    """Build an :class:`Instance` from a parsed instance document.

    ``doc`` has keys ``areas`` (list of ``{id, attrs, x?, y?}``), ``edges``
    (undirected ``[id, id]`` pairs) and ``p``. With ``"directed": true`` every
    edge must be listed in both orientations.
    """
    try:
        areas = doc["areas"]
        raw_edges = doc.get("edges", [])
        p = int(doc["p"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError(f"missing or malformed key: {exc}") from None
    names = [str(a["id"]) for a in areas]
    seen = set()
    for name in names:
        if name in seen:
            raise InstanceError(f"duplicate area id: {name}")
        seen.add(name)
    pos = {name: i for i, name in enumerate(names)}
    attrs = [a["attrs"] if isinstance(a["attrs"], list) else [a["attrs"]] for a in areas]
    if len({len(r) for r in attrs}) != 1:
        raise InstanceError("attribute vectors must share one length")
    has_xy = ["x" in a and "y" in a for a in areas]
    coords = [[a["x"], a["y"]] for a in areas] if all(has_xy) else None

    nbrs: list[set[int]] = [set() for _ in names]
    pairs = set()
    for e in raw_edges:
        a, b = (str(v) for v in e)
        if a not in pos or b not in pos:
            raise InstanceError(f"edge references unknown area: {a}-{b}")
        i, j = pos[a], pos[b]
        if i == j:
            raise InstanceError(f"self adjacency at area {a}")
        pairs.add((i, j))
        nbrs[i].add(j)
        nbrs[j].add(i)
    if doc.get("directed", False):
        for i, j in sorted(pairs):
            if (j, i) not in pairs:
                raise InstanceError(f"asymmetric adjacency: {names[i]} -> {names[j]}")
    return Instance(
        names=tuple(names),
        neighbors=tuple(tuple(sorted(s)) for s in nbrs),
        attributes=np.array(attrs, dtype=float),
        p=p,
        coordinates=None if coords is None else np.array(coords, dtype=float),
        metric=doc.get("metric", metric),
    )


def load_instance(source, metric: str = "l2") -> Instance:
    """Load an instance from a JSON file path, a JSON string, or a dict."""
    if isinstance(source, dict):
        return instance_from_dict(source, metric)
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"not a valid instance document: {exc}") from None
    return instance_from_dict(doc, metric)


def instance_to_dict(instance: Instance) -> dict:
    areas = []
    for i, name in enumerate(instance.names):
        entry = {"id": name, "attrs": [float(v) for v in instance.attributes[i]]}
        if instance.coordinates is not None:
            entry["x"], entry["y"] = (float(v) for v in instance.coordinates[i])
        areas.append(entry)
    edges = [[instance.names[i], instance.names[j]] for i, j in instance.undirected_edges]
    doc = {"areas": areas, "edges": edges, "p": instance.p}
    if instance.metric != "l2":
        doc["metric"] = instance.metric
    return doc


def save_instance(instance: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(instance), indent=1) + "\n", encoding="utf-8")


def generate_grid(
    rows: int,
    cols: int,
    p: int,
    attribute_rule: str = "constant",
    seed: int | None = None,
    metric: str = "l2",
) -> Instance:
    """Rook-adjacency grid with areas numbered ``1..rows*cols`` row-major.

    ``attribute_rule`` is one of ``constant``, ``coordinate-sum`` or
    ``seeded-random`` (uniform on [0, 10), requires ``seed``).
    """
    n = rows * cols
    if rows < 1 or cols < 1:
        raise InstanceError("grid needs at least one row and column")
    if not 1 <= p <= n:
        raise InstanceError(f"p={p} out of range 1..{n}")
    rr, cc = np.divmod(np.arange(n), cols)
    if attribute_rule == "constant":
        attrs = np.ones(n)
    elif attribute_rule == "coordinate-sum":
        attrs = (rr + cc).astype(float)
    elif attribute_rule == "seeded-random":
        if seed is None:
            raise InstanceError("seeded-random attributes need an explicit seed")
        attrs = np.random.default_rng(seed).uniform(0.0, 10.0, n)
    else:
        raise InstanceError(f"unknown attribute rule {attribute_rule!r}")
    nbrs = []
    for i in range(n):
        r, c = divmod(i, cols)
        cand = [(r - 1, c), (r, c - 1), (r, c + 1), (r + 1, c)]
        nbrs.append(tuple(a * cols + b for a, b in cand if 0 <= a < rows and 0 <= b < cols))
    # y grows downward so row 0 is drawn on top
    coords = np.column_stack([cc, rr]).astype(float)
    return Instance(
        names=tuple(str(i + 1) for i in range(n)),
        neighbors=tuple(nbrs),
        attributes=attrs[:, None],
        p=p,
        coordinates=coords,
        metric=metric,
    )


def heterogeneity(instance: Instance, assignment: Assignment | Sequence[int]) -> float:
    """Sum of ``w_ij`` over unordered pairs of areas sharing a region."""
    labels = np.asarray(assignment.labels if isinstance(assignment, Assignment) else assignment)
    same = labels[:, None] == labels[None, :]
    return float(np.triu(instance.weights * same, 1).sum())
