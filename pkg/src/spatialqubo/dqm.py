"""Discrete quadratic model of the flow-based contiguity formulation.

Variables, in registry order:

* ``("d", i)``: region of area ``i``; case ``c`` means region ``c + 1``.
* ``("f", i, j)``: flow on directed edge ``(i, j)``; case ``v`` is flow ``v`` in ``0..M``.
* ``("u", i, j)``: gap variable of directed edge ``(i, j)`` with ``p`` cases.

A pairwise model cannot make a single ``u_ij`` equal ``|d_i - d_j|`` (the
"same region" test is not separable in ``d_i`` and ``d_j``), so each
orientation acts as a one-sided cut: the zero-energy value of ``u_ij`` is
``d_i`` when ``d_i < d_j`` and 0 otherwise. Flow ``f_ij`` is blocked when
either ``u_ij`` or ``u_ji`` is nonzero, and both being zero costs ``K``
whenever the endpoints lie in different regions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .instance import Assignment, Instance

__all__ = [
    "PenaltyConfig",
    "Seeds",
    "DiscreteVariable",
    "DqmModel",
    "build_dqm",
    "evaluate_dqm",
    "canonical_gap",
    "dqm_configuration",
    "export_dqm",
]


@dataclass(frozen=True)
class PenaltyConfig:
    """Penalty strengths and flow encoding bounds.

    ``lambda1`` one-hot / root clamp, ``lambda2`` flow link, ``lambda3``
    non-root conservation, ``lambda4`` root conservation. ``M`` bounds the
    flow on one edge and ``L`` is the number of bits used to expand it.
    ``epsilon`` is an optional pull-down on larger gap cases (DQM only).
    """

    lambda1: float
    lambda2: float
    lambda3: float
    lambda4: float
    M: int
    L: int
    epsilon: float = 0.0

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3", "lambda4", "epsilon"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.M < 0 or self.L < 0:
            raise ValueError("M and L must be nonnegative")
        if 2**self.L - 1 < self.M:
            raise ValueError(f"L={self.L} bits cannot hold flow bound M={self.M}")

    @classmethod
    def default(cls, instance: Instance, M: int | None = None, L: int | None = None, **overrides) -> PenaltyConfig:
        """``lambda_i = 1 + sum of all w_ij``, ``M = n - 1``, ``L = ceil(log2(M + 1))``."""
        if M is None:
            M = instance.n - 1
        if L is None:
            L = math.ceil(math.log2(M + 1)) if M > 0 else 0
        lam = 1.0 + instance.total_weight
        values = dict(lambda1=lam, lambda2=lam, lambda3=lam, lambda4=lam, M=M, L=L)
        values.update(overrides)
        return cls(**values)

    @property
    def flow_capacity(self) -> int:
        """Largest flow representable with ``L`` bits."""
        return 2**self.L - 1

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("lambda1", "lambda2", "lambda3", "lambda4", "M", "L", "epsilon")}

    def with_(self, **changes) -> PenaltyConfig:
        return replace(self, **changes)


@dataclass(frozen=True)
class Seeds:
    """Root area (internal index) of every region ``1..p``."""

    roots: Mapping[int, int]

    def __post_init__(self):
        object.__setattr__(self, "roots", {int(k): int(r) for k, r in sorted(dict(self.roots).items())})
        areas = list(self.roots.values())
        if len(set(areas)) != len(areas):
            raise ValueError("duplicate roots")

    @classmethod
    def from_list(cls, areas: Sequence[int]) -> Seeds:
        return cls({k + 1: a for k, a in enumerate(areas)})

    def validate(self, instance: Instance) -> None:
        if sorted(self.roots) != list(range(1, instance.p + 1)):
            raise ValueError(f"need one root for each region 1..{instance.p}")
        for k, r in self.roots.items():
            if not 0 <= r < instance.n:
                raise ValueError(f"root {r} of region {k} is not an area")

    def region_of(self, area: int) -> int | None:
        for k, r in self.roots.items():
            if r == area:
                return k
        return None

    def __contains__(self, area) -> bool:
        return area in self.roots.values()


@dataclass(frozen=True)
class DiscreteVariable:
    label: tuple
    num_cases: int
    encoding: str = "onehot"  # "binary": cases are the integers 0..num_cases-1


@dataclass(eq=False)
class DqmModel:
    variables: list[DiscreteVariable]
    linear: list[np.ndarray]
    quadratic: dict[tuple[int, int], np.ndarray]
    offset: float = 0.0
    penalty_config: PenaltyConfig | None = None
    seeds: Seeds | None = None
    registry: dict[tuple, int] = field(default_factory=dict)

    @classmethod
    def empty(cls) -> DqmModel:
        return cls([], [], {})

    def add_variable(self, num_cases: int, label=None, encoding: str = "onehot") -> int:
        idx = len(self.variables)
        label = (idx,) if label is None else label
        if label in self.registry:
            raise ValueError(f"duplicate variable {label}")
        self.variables.append(DiscreteVariable(label, num_cases, encoding))
        self.linear.append(np.zeros(num_cases))
        self.registry[label] = idx
        return idx

    def add_linear(self, v: int, biases) -> None:
        self.linear[v] += np.asarray(biases, dtype=float)

    def add_quadratic(self, u: int, v: int, table) -> None:
        if u == v:
            raise ValueError("quadratic biases need two distinct variables")
        table = np.asarray(table, dtype=float)
        if u > v:
            u, v, table = v, u, table.T
        if (u, v) not in self.quadratic:
            self.quadratic[u, v] = np.zeros((self.variables[u].num_cases, self.variables[v].num_cases))
        self.quadratic[u, v] += table

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    def index(self, *label) -> int:
        return self.registry[tuple(label)]


def canonical_gap(d_i: int, d_j: int) -> int:
    """Zero-energy case of the gap variable of edge ``(i, j)``."""
    return d_i if d_i < d_j else 0


def _add_square(model: DqmModel, weight: float, terms, indicators, const: float) -> None:
    """Add ``weight * (sum s*f + sum t*[d=k] + const)**2`` to ``model``.

    ``terms`` holds ``(flow var, sign)``; ``indicators`` holds
    ``(assignment var, case, coeff)``.
    """
    if weight == 0:
        return
    pieces = []
    for v, s in terms:
        n = model.variables[v].num_cases
        pieces.append((v, s * np.arange(n, dtype=float)))
    for v, case, t in indicators:
        vec = np.zeros(model.variables[v].num_cases)
        vec[case] = t
        pieces.append((v, vec))
    for a, (u, vu) in enumerate(pieces):
        model.add_linear(u, weight * (vu**2 + 2 * const * vu))
        for v, vv in pieces[a + 1 :]:
            if u == v:
                model.add_linear(u, 2 * weight * vu * vv)
            else:
                model.add_quadratic(u, v, 2 * weight * np.outer(vu, vv))
    model.offset += weight * const**2


def build_dqm(instance: Instance, seeds: Seeds, config: PenaltyConfig | None = None) -> DqmModel:
    """Compile ``instance`` into the flow-contiguity discrete quadratic model."""
    seeds.validate(instance)
    if config is None:
        config = PenaltyConfig.default(instance)
    n, p, M = instance.n, instance.p, config.M
    model = DqmModel.empty()
    model.penalty_config = config
    model.seeds = seeds
    d = [model.add_variable(p, ("d", i)) for i in range(n)]
    f = {e: model.add_variable(M + 1, ("f", *e), "binary") for e in instance.edges}
    u = {e: model.add_variable(p, ("u", *e)) for e in instance.edges}

    w = instance.weights
    eye = np.eye(p)
    for i in range(n):
        for j in range(i + 1, n):
            if w[i, j]:
                model.add_quadratic(d[i], d[j], w[i, j] * eye)

    K = config.lambda2 * max(M, 1)
    labels = np.arange(1, p + 1)
    cases = np.arange(p)
    a, c = np.meshgrid(labels, cases, indexing="ij")
    # (d_i, u_ij): -K when u = d_i, +K when u < d_i, 0 when u > d_i; inactive at u = 0
    gap_i = np.where(c == 0, 0.0, np.where(a == c, -K, np.where(a > c, K, 0.0)))
    # (d_j, u_ij): 2K when d_j <= u, inactive at u = 0
    gap_j = np.where((c > 0) & (a <= c), 2 * K, 0.0)
    less = K * (labels[:, None] < labels[None, :]).astype(float)
    pull = config.epsilon * cases
    flow_vals = np.arange(M + 1, dtype=float)
    link = config.lambda2 * np.outer(flow_vals, (cases > 0).astype(float))
    for (i, j), ue in u.items():
        model.add_quadratic(d[i], ue, gap_i)
        model.add_quadratic(d[j], ue, gap_j)
        model.add_quadratic(d[i], d[j], less)
        model.add_linear(ue, pull)
        model.add_quadratic(f[i, j], ue, link)
        model.add_quadratic(f[i, j], u[j, i], link)

    for i in range(n):
        if i in seeds:
            continue
        terms = [(f[j, i], 1) for j in instance.neighbors[i]] + [(f[i, j], -1) for j in instance.neighbors[i]]
        _add_square(model, config.lambda3, terms, [], -1.0)

    for k, r in seeds.roots.items():
        terms = [(f[r, j], 1) for j in instance.neighbors[r]] + [(f[j, r], -1) for j in instance.neighbors[r]]
        indicators = [(d[i], k - 1, -1.0) for i in range(n)]
        _add_square(model, config.lambda4, terms, indicators, 1.0)
        clamp = np.full(p, 10 * config.lambda1)
        clamp[k - 1] = 0.0
        model.add_linear(d[r], clamp)
    return model


def evaluate_dqm(model: DqmModel, configuration: Sequence[int]) -> float:
    """Energy of one case choice per variable."""
    config = np.asarray(configuration, dtype=int)
    if len(config) != model.num_variables:
        raise ValueError(f"expected {model.num_variables} cases, got {len(config)}")
    for v, c in enumerate(config):
        if not 0 <= c < model.variables[v].num_cases:
            raise ValueError(f"case {c} out of range for variable {model.variables[v].label}")
    energy = model.offset
    for v, c in enumerate(config):
        energy += model.linear[v][c]
    for (u, v), table in model.quadratic.items():
        energy += table[config[u], config[v]]
    return float(energy)


def dqm_configuration(model: DqmModel, instance: Instance, assignment: Assignment, flows=None) -> list[int]:
    """Case vector for a labeling and flows, with gap variables at their zero-energy cases."""
    config = [0] * model.num_variables
    for i, k in enumerate(assignment.labels):
        config[model.index("d", i)] = k - 1
    for i, j in instance.edges:
        if flows is not None:
            config[model.index("f", i, j)] = flows[i, j]
        config[model.index("u", i, j)] = canonical_gap(assignment[i], assignment[j])
    return config


def export_dqm(model: DqmModel) -> str:
    """Plain-text dump: variables with case counts, then nonzero biases."""
    lines = [f"# dqm vars={model.num_variables} offset={model.offset!r}"]
    for v, var in enumerate(model.variables):
        label = ",".join(str(x) for x in var.label)
        lines.append(f"var {v} {label} cases={var.num_cases} encoding={var.encoding}")
    for v, biases in enumerate(model.linear):
        for c in np.flatnonzero(biases):
            lines.append(f"lin {v} {c} {float(biases[c])!r}")
    for (u, v) in sorted(model.quadratic):
        table = model.quadratic[u, v]
        for cu, cv in zip(*np.nonzero(table)):
            lines.append(f"quad {u} {v} {cu} {cv} {float(table[cu, cv])!r}")
    return "\n".join(lines) + "\n"
