"""Binary quadratic models of the contiguity-constrained regionalization problem.

Bit layout of a full model (:class:`VariableRegistry`)::

    x[i, k]      area i in region k              n * p bits
    y[(i,j), l]  bit l of the flow on (i, j)     |E| * L bits
    u[(i,j), k]  product x[i, k] * x[j, k]       |E| * p bits

Energy is ``offset + sum(linear * b) + sum(q_ij * b_i * b_j)`` with the
quadratic part stored once per unordered pair ``i < j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .dqm import DqmModel, PenaltyConfig, Seeds
from .instance import Assignment, Instance
from .verify import ContiguityReport, FlowConfig, check_contiguity

__all__ = [
    "VariableRegistry",
    "QuboModel",
    "QuboBuilder",
    "FeasibilityReport",
    "build_qubo",
    "build_assignment_qubo",
    "dqm_to_qubo",
    "dqm_case_bits",
    "evaluate_qubo",
    "flip_delta",
    "encode",
    "decode",
    "export_qubo",
    "read_qubo",
    "to_ising",
]


@dataclass(frozen=True)
class VariableRegistry:
    n: int
    p: int
    edges: tuple[tuple[int, int], ...]
    L: int

    @cached_property
    def edge_index(self) -> dict[tuple[int, int], int]:
        return {e: t for t, e in enumerate(self.edges)}

    @property
    def num_assignment(self) -> int:
        return self.n * self.p

    @property
    def num_flow(self) -> int:
        return len(self.edges) * self.L

    @property
    def num_product(self) -> int:
        return len(self.edges) * self.p

    @property
    def size(self) -> int:
        return self.num_assignment + self.num_flow + self.num_product

    def x(self, i: int, k: int) -> int:
        return i * self.p + (k - 1)

    def y(self, edge, bit: int) -> int:
        """Index of flow bit ``bit`` (1-based, weight ``2**(bit-1)``)."""
        return self.num_assignment + self.edge_index[tuple(edge)] * self.L + (bit - 1)

    def u(self, edge, k: int) -> int:
        return self.num_assignment + self.num_flow + self.edge_index[tuple(edge)] * self.p + (k - 1)

    @property
    def assignment_bits(self) -> dict[tuple[int, int], int]:
        return {(i, k): self.x(i, k) for i in range(self.n) for k in range(1, self.p + 1)}

    @property
    def flow_bits(self) -> dict[tuple[tuple[int, int], int], int]:
        return {(e, b): self.y(e, b) for e in self.edges for b in range(1, self.L + 1)}

    @property
    def product_bits(self) -> dict[tuple[tuple[int, int], int], int]:
        return {(e, k): self.u(e, k) for e in self.edges for k in range(1, self.p + 1)}

    def describe(self, index: int) -> tuple:
        if index < self.num_assignment:
            i, k = divmod(index, self.p)
            return ("x", i, k + 1)
        index -= self.num_assignment
        if index < self.num_flow:
            t, b = divmod(index, self.L)
            return ("y", self.edges[t], b + 1)
        t, k = divmod(index - self.num_flow, self.p)
        return ("u", self.edges[t], k + 1)

    def flow_terms(self, edge, sign: float = 1.0) -> list[tuple[int, float]]:
        return [(self.y(edge, b), sign * 2 ** (b - 1)) for b in range(1, self.L + 1)]


@dataclass(eq=False)
class QuboModel:
    num_vars: int
    linear: np.ndarray
    quadratic: dict[tuple[int, int], float]
    offset: float = 0.0
    registry: VariableRegistry | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.linear = np.asarray(self.linear, dtype=float)
        if self.linear.shape != (self.num_vars,):
            raise ValueError("linear vector must have num_vars entries")
        for (i, j), c in self.quadratic.items():
            if not 0 <= i < j < self.num_vars:
                raise ValueError(f"bad quadratic key {(i, j)}")
            if not math.isfinite(c):
                raise ValueError("non-finite quadratic coefficient")
        if not (np.all(np.isfinite(self.linear)) and math.isfinite(self.offset)):
            raise ValueError("non-finite coefficients")

    @cached_property
    def _pairs(self):
        keys = sorted(self.quadratic)
        rows = np.array([k[0] for k in keys], dtype=np.int64)
        cols = np.array([k[1] for k in keys], dtype=np.int64)
        vals = np.array([self.quadratic[k] for k in keys], dtype=float)
        return rows, cols, vals

    @cached_property
    def adjacency(self):
        """Symmetric CSR neighbor structure ``(indptr, indices, data)``."""
        rows, cols, vals = self._pairs
        r = np.concatenate([rows, cols])
        c = np.concatenate([cols, rows])
        v = np.concatenate([vals, vals])
        order = np.lexsort((c, r))
        r, c, v = r[order], c[order], v[order]
        indptr = np.zeros(self.num_vars + 1, dtype=np.int64)
        np.add.at(indptr, r + 1, 1)
        return np.cumsum(indptr), c, v

    def energy(self, bits) -> float:
        return evaluate_qubo(self, bits)

    def energies(self, samples) -> np.ndarray:
        """Vectorized energies of a 2-D array of bit vectors."""
        X = np.asarray(samples, dtype=float)
        rows, cols, vals = self._pairs
        return self.offset + X @ self.linear + (X[:, rows] * X[:, cols]) @ vals

    def coefficient_scale(self) -> tuple[float, float]:
        """Mean and smallest nonzero absolute coefficient."""
        c = np.abs(np.concatenate([self.linear, self._pairs[2]]))
        c = c[c > 0]
        if c.size == 0:
            return 0.0, 0.0
        return float(c.mean()), float(c.min())

    def to_matrix(self) -> np.ndarray:
        """Upper-triangular matrix with linear terms on the diagonal."""
        Q = np.diag(self.linear)
        for (i, j), c in self.quadratic.items():
            Q[i, j] = c
        return Q


class QuboBuilder:
    """Accumulates polynomial terms, folding ``b*b`` into ``b``."""

    def __init__(self, num_vars: int):
        self.num_vars = num_vars
        self.linear = np.zeros(num_vars)
        self.quadratic: dict[tuple[int, int], float] = {}
        self.offset = 0.0

    def add_linear(self, i: int, c: float) -> None:
        self.linear[i] += c

    def add_quadratic(self, i: int, j: int, c: float) -> None:
        if i == j:
            self.linear[i] += c
            return
        key = (i, j) if i < j else (j, i)
        self.quadratic[key] = self.quadratic.get(key, 0.0) + c

    def add_square(self, weight: float, terms: Sequence[tuple[int, float]], const: float = 0.0) -> None:
        """Add ``weight * (sum c_t b_t + const)**2``."""
        if weight == 0:
            return
        for a, (i, ci) in enumerate(terms):
            self.add_linear(i, weight * (ci * ci + 2 * const * ci))
            for j, cj in terms[a + 1 :]:
                self.add_quadratic(i, j, 2 * weight * ci * cj)
        self.offset += weight * const * const

    def build(self, registry=None, meta=None) -> QuboModel:
        quad = {k: v for k, v in sorted(self.quadratic.items()) if v != 0.0}
        return QuboModel(self.num_vars, self.linear.copy(), quad, self.offset, registry, dict(meta or {}))


def _root_clamp(builder: QuboBuilder, x, seeds: Seeds, p: int, strength: float) -> None:
    for k, r in seeds.roots.items():
        for kk in range(1, p + 1):
            if kk != k:
                builder.add_linear(x(r, kk), strength)


def build_qubo(instance: Instance, seeds: Seeds, config: PenaltyConfig | None = None) -> QuboModel:
    """Full QUBO: objective, one-hot, flow link, and both conservation families.

    The flow-link family per directed edge is
    ``lambda2 * [f(1 - sum_k u_k) + (F+1) sum_k P_k + F sum_{k<k'} u_k u_k']``
    with ``F = 2**L - 1`` the largest encodable flow and
    ``P_k = x_ik x_jk - 2 x_ik u_k - 2 x_jk u_k + 3 u_k``. The ``(F+1)``
    weight keeps every ``u_k`` at its product value and the pairwise guard
    keeps ``sum_k u_k`` from exceeding 1; without them the term can go
    negative and reward flow between regions.
    """
    seeds.validate(instance)
    if config is None:
        config = PenaltyConfig.default(instance)
    n, p, L = instance.n, instance.p, config.L
    reg = VariableRegistry(n, p, instance.edges, L)
    b = QuboBuilder(reg.size)
    x, u = reg.x, reg.u
    F = config.flow_capacity

    w = instance.weights
    for i in range(n):
        for j in range(i + 1, n):
            if w[i, j]:
                for k in range(1, p + 1):
                    b.add_quadratic(x(i, k), x(j, k), w[i, j])

    for i in range(n):
        b.add_square(config.lambda1, [(x(i, k), 1.0) for k in range(1, p + 1)], -1.0)
    _root_clamp(b, x, seeds, p, 10 * config.lambda1)

    lam2 = config.lambda2
    for e in instance.edges:
        i, j = e
        flow = reg.flow_terms(e)
        for yb, c in flow:
            b.add_linear(yb, lam2 * c)
        for k in range(1, p + 1):
            uk = u(e, k)
            for yb, c in flow:
                b.add_quadratic(yb, uk, -lam2 * c)
            mu = lam2 * (F + 1)
            b.add_quadratic(x(i, k), x(j, k), mu)
            b.add_quadratic(x(i, k), uk, -2 * mu)
            b.add_quadratic(x(j, k), uk, -2 * mu)
            b.add_linear(uk, 3 * mu)
            for kk in range(k + 1, p + 1):
                b.add_quadratic(uk, u(e, kk), lam2 * F)

    for i in range(n):
        if i in seeds:
            continue
        terms = []
        for j in instance.neighbors[i]:
            terms += reg.flow_terms((j, i), 1.0) + reg.flow_terms((i, j), -1.0)
        b.add_square(config.lambda3, terms, -1.0)

    for k, r in seeds.roots.items():
        terms = []
        for j in instance.neighbors[r]:
            terms += reg.flow_terms((r, j), 1.0) + reg.flow_terms((j, r), -1.0)
        terms += [(x(i, k), -1.0) for i in range(n)]
        b.add_square(config.lambda4, terms, 1.0)

    meta = {"form": "qubo", "config": config.to_dict(), "roots": dict(seeds.roots)}
    return b.build(reg, meta)


def build_assignment_qubo(instance: Instance, seeds: Seeds | None = None, config: PenaltyConfig | None = None) -> QuboModel:
    """Objective, one-hot and root clamps only (``n * p`` bits, no contiguity)."""
    if config is None:
        config = PenaltyConfig.default(instance)
    n, p = instance.n, instance.p
    reg = VariableRegistry(n, p, (), 0)
    b = QuboBuilder(reg.size)
    w = instance.weights
    for i in range(n):
        for j in range(i + 1, n):
            if w[i, j]:
                for k in range(1, p + 1):
                    b.add_quadratic(reg.x(i, k), reg.x(j, k), w[i, j])
    for i in range(n):
        b.add_square(config.lambda1, [(reg.x(i, k), 1.0) for k in range(1, p + 1)], -1.0)
    if seeds is not None:
        seeds.validate(instance)
        _root_clamp(b, reg.x, seeds, p, 10 * config.lambda1)
    return b.build(reg, {"form": "assignment", "config": config.to_dict()})


def _fit(table: np.ndarray, basis: np.ndarray) -> np.ndarray:
    coef, *_ = np.linalg.lstsq(basis, table.ravel(), rcond=None)
    resid = np.abs(basis @ coef - table.ravel()).max(initial=0.0)
    if resid > 1e-9 * (1.0 + np.abs(table).max(initial=0.0)):
        raise ValueError("case table is not representable in binary expansion")
    coef[np.abs(coef) < 1e-12 * (1.0 + np.abs(table).max(initial=0.0))] = 0.0
    return coef


def _binary_width(num_cases: int, model: DqmModel) -> int:
    need = math.ceil(math.log2(num_cases)) if num_cases > 1 else 0
    if model.penalty_config is not None:
        need = max(need, model.penalty_config.L)
    return need


def dqm_to_qubo(model: DqmModel, onehot_strength: float | None = None) -> QuboModel:
    """Encode a discrete model in bits.

    One-hot variables get one bit per case plus a one-hot penalty; variables
    with ``encoding="binary"`` (cases are consecutive integers from 0) are
    binary expanded, which requires their case tables to be polynomial in the
    case value: at most quadratic on their own, linear against a one-hot
    partner, bilinear against another binary variable.
    """
    if onehot_strength is None:
        if model.penalty_config is not None:
            onehot_strength = model.penalty_config.lambda1
        else:
            mags = [np.abs(t).sum() for t in model.linear] + [np.abs(t).sum() for t in model.quadratic.values()]
            onehot_strength = 1.0 + float(sum(mags))

    bits: list[list[int]] = []
    weights: list[np.ndarray | None] = []
    total = 0
    for var in model.variables:
        if var.encoding == "binary":
            width = _binary_width(var.num_cases, model)
            bits.append(list(range(total, total + width)))
            weights.append(2.0 ** np.arange(width))
        else:
            width = var.num_cases
            bits.append(list(range(total, total + width)))
            weights.append(None)
        total += width

    b = QuboBuilder(total)
    b.offset += model.offset
    for v, var in enumerate(model.variables):
        t = model.linear[v]
        if weights[v] is None:
            for c, bias in enumerate(t):
                b.add_linear(bits[v][c], bias)
            b.add_square(onehot_strength, [(q, 1.0) for q in bits[v]], -1.0)
        else:
            vals = np.arange(var.num_cases, dtype=float)
            deg = min(2, var.num_cases - 1)
            alpha, *rest = _fit(t, np.vander(vals, deg + 1, increasing=True))
            b.offset += alpha
            terms = list(zip(bits[v], weights[v]))
            if deg >= 1:
                for q, wq in terms:
                    b.add_linear(q, rest[0] * wq)
            if deg >= 2 and rest[1]:
                b.add_square(rest[1], terms)

    for (u, v), table in sorted(model.quadratic.items()):
        bu, bv = weights[u] is not None, weights[v] is not None
        if not bu and not bv:
            for cu, cv in zip(*np.nonzero(table)):
                b.add_quadratic(bits[u][cu], bits[v][cv], table[cu, cv])
        elif bu and bv:
            vu = np.arange(table.shape[0], dtype=float)
            vv = np.arange(table.shape[1], dtype=float)
            A, B = np.meshgrid(vu, vv, indexing="ij")
            cols = [np.ones_like(A)]
            if len(vu) > 1:
                cols.append(A)
            if len(vv) > 1:
                cols.append(B)
            if len(vu) > 1 and len(vv) > 1:
                cols.append(A * B)
            coef = list(_fit(table, np.column_stack([c.ravel() for c in cols])))
            b.offset += coef.pop(0)
            cu_ = coef.pop(0) if len(vu) > 1 else 0.0
            cv_ = coef.pop(0) if len(vv) > 1 else 0.0
            cuv = coef.pop(0) if coef else 0.0
            for q, wq in zip(bits[u], weights[u]):
                b.add_linear(q, cu_ * wq)
                for r, wr in zip(bits[v], weights[v]):
                    if cuv:
                        b.add_quadratic(q, r, cuv * wq * wr)
            for r, wr in zip(bits[v], weights[v]):
                b.add_linear(r, cv_ * wr)
        else:
            if bv:
                u, v, table = v, u, table.T
            # u is binary, v is one-hot: each column must be affine in the value of u
            vals = np.arange(table.shape[0], dtype=float)
            deg = min(1, len(vals) - 1)
            basis = np.vander(vals, deg + 1, increasing=True)
            for cv in range(table.shape[1]):
                col = table[:, cv]
                if not col.any():
                    continue
                coef = _fit(col, basis)
                b.add_linear(bits[v][cv], coef[0])
                if deg:
                    for q, wq in zip(bits[u], weights[u]):
                        b.add_quadratic(q, bits[v][cv], coef[1] * wq)

    registry = None
    kinds = [var.label[0] if var.label else None for var in model.variables]
    if model.seeds is not None and model.penalty_config is not None:
        n = kinds.count("d")
        p = model.variables[0].num_cases if n else 0
        edges = tuple(var.label[1:] for var in model.variables if var.label[0] == "f")
        registry = VariableRegistry(n, p, edges, model.penalty_config.L)
        if registry.size != total:
            registry = None
    meta = {"form": "dqm", "bits": [list(bb) for bb in bits]}
    if model.penalty_config is not None:
        meta["config"] = model.penalty_config.to_dict()
    return b.build(registry, meta)


def dqm_case_bits(model: QuboModel, dqm: DqmModel, configuration: Sequence[int]) -> np.ndarray:
    """Bits of a :func:`dqm_to_qubo` model that represent one case per DQM variable."""
    layout = model.meta.get("bits")
    if layout is None or len(layout) != dqm.num_variables:
        raise ValueError("model was not produced by dqm_to_qubo from this DQM")
    x = np.zeros(model.num_vars, dtype=np.int8)
    for v, (var, c) in enumerate(zip(dqm.variables, configuration)):
        if not 0 <= c < var.num_cases:
            raise ValueError(f"case {c} out of range for variable {var.label}")
        if var.encoding == "binary":
            for pos, q in enumerate(layout[v]):
                x[q] = (int(c) >> pos) & 1
        else:
            x[layout[v][c]] = 1
    return x


def _as_bits(model: QuboModel, bits) -> np.ndarray:
    x = np.asarray(bits)
    if x.shape != (model.num_vars,):
        raise ValueError(f"expected {model.num_vars} bits, got shape {x.shape}")
    return x.astype(float)


def evaluate_qubo(model: QuboModel, bits) -> float:
    x = _as_bits(model, bits)
    rows, cols, vals = model._pairs
    return float(model.offset + x @ model.linear + (x[rows] * x[cols]) @ vals)


def flip_delta(model: QuboModel, bits, i: int) -> float:
    """Energy change from flipping bit ``i``, in O(degree of i)."""
    indptr, indices, data = model.adjacency
    x = np.asarray(bits)
    lo, hi = indptr[i], indptr[i + 1]
    field_ = model.linear[i] + float(data[lo:hi] @ x[indices[lo:hi]])
    return (1 - 2 * int(x[i])) * field_


def encode(model: QuboModel, assignment: Assignment, flows: FlowConfig | None = None) -> np.ndarray:
    """Bit vector for a labeling and flows, with product bits set to ``x_ik x_jk``."""
    reg = model.registry
    if reg is None:
        raise ValueError("model has no variable registry")
    bits = np.zeros(model.num_vars, dtype=np.int8)
    for i, k in enumerate(assignment.labels):
        bits[reg.x(i, k)] = 1
    for e in reg.edges:
        f = flows[e] if flows is not None else 0
        if f > 2**reg.L - 1:
            raise ValueError(f"flow {f} on {e} exceeds {reg.L}-bit capacity")
        for bit in range(1, reg.L + 1):
            bits[reg.y(e, bit)] = (f >> (bit - 1)) & 1
        i, j = e
        if assignment[i] == assignment[j]:
            bits[reg.u(e, assignment[i])] = 1
    return bits


@dataclass
class FeasibilityReport:
    onehot_violations: list[int]
    link_violations: list[tuple[int, int]]
    product_violations: list[tuple[tuple[int, int], int]]
    conservation_residuals: list[int]
    contiguity: ContiguityReport | None
    # flows above M but within the L-bit capacity; reported, not penalized
    flow_overflows: list[tuple[int, int]] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return (
            not self.onehot_violations
            and not self.link_violations
            and not self.product_violations
            and not any(self.conservation_residuals)
            and (self.contiguity is None or self.contiguity.ok)
        )

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "onehot_violations": list(self.onehot_violations),
            "link_violations": [list(e) for e in self.link_violations],
            "product_violations": [[list(e), k] for e, k in self.product_violations],
            "conservation_residuals": list(self.conservation_residuals),
            "flow_overflows": [list(e) for e in self.flow_overflows],
            "contiguous": None if self.contiguity is None else self.contiguity.ok,
            "disconnected_regions": [] if self.contiguity is None else self.contiguity.disconnected_regions(),
        }


def decode(model: QuboModel, bits, instance: Instance) -> tuple[Assignment, FlowConfig, FeasibilityReport]:
    """Read labels and flows off a bit vector and report every violated constraint.

    An area with several set assignment bits takes the lowest region among
    them; an area with none falls back to region 1.
    """
    reg = model.registry
    if reg is None:
        raise ValueError("model has no variable registry")
    x = np.asarray(bits).astype(int)
    if x.shape != (model.num_vars,):
        raise ValueError(f"expected {model.num_vars} bits, got shape {x.shape}")
    p = reg.p
    labels, onehot = [], []
    for i in range(reg.n):
        row = x[reg.x(i, 1) : reg.x(i, 1) + p]
        if row.sum() != 1:
            onehot.append(i)
        hot = np.flatnonzero(row)
        labels.append(int(hot[0]) + 1 if hot.size else 1)
    assignment = Assignment(labels)

    flows = {}
    for e in reg.edges:
        v = sum(int(x[reg.y(e, bit)]) << (bit - 1) for bit in range(1, reg.L + 1))
        if v:
            flows[e] = v
    fc = FlowConfig(flows)
    M = model.meta.get("config", {}).get("M")
    overflow = [e for e, v in flows.items() if M is not None and v > M]

    link = [e for e, v in flows.items() if labels[e[0]] != labels[e[1]]]
    product = []
    # product bits only carry x_ik * x_jk in the direct formulation
    for e in reg.edges if model.meta.get("form") == "qubo" else ():
        i, j = e
        for k in range(1, p + 1):
            if x[reg.u(e, k)] != x[reg.x(i, k)] * x[reg.x(j, k)]:
                product.append((e, k))

    roots = {int(r): int(k) for k, r in model.meta.get("roots", {}).items()}
    residuals = []
    for i in range(reg.n):
        net = fc.net_inflow(instance, i)
        if i in roots:
            size = int(x[[reg.x(a, roots[i]) for a in range(reg.n)]].sum())
            residuals.append(net - (1 - size))
        else:
            residuals.append(net - 1)
    contiguity = check_contiguity(instance, assignment) if max(labels) <= instance.p else None
    return assignment, fc, FeasibilityReport(onehot, link, product, residuals, contiguity, overflow)


def export_qubo(model: QuboModel) -> str:
    """Coordinate text: ``# vars=N offset=c`` then sorted ``i j coeff`` lines (``i == j`` linear)."""
    entries = [(i, i, float(c)) for i, c in enumerate(model.linear) if c != 0.0]
    entries += [(i, j, float(c)) for (i, j), c in model.quadratic.items()]
    entries.sort()
    lines = [f"# vars={model.num_vars} offset={float(model.offset)!r}"]
    lines += [f"{i} {j} {c!r}" for i, j, c in entries]
    return "\n".join(lines) + "\n"


def read_qubo(text: str) -> QuboModel:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = dict(part.split("=") for part in lines[0].lstrip("#").split())
    n = int(header["vars"])
    linear = np.zeros(n)
    quad = {}
    for ln in lines[1:]:
        i, j, c = ln.split()
        i, j, c = int(i), int(j), float(c)
        if i == j:
            linear[i] += c
        else:
            key = (min(i, j), max(i, j))
            quad[key] = quad.get(key, 0.0) + c
    return QuboModel(n, linear, quad, float(header["offset"]))


def to_ising(model: QuboModel) -> tuple[np.ndarray, dict[tuple[int, int], float], float]:
    """Spin form ``(h, J, offset)`` under ``b = (1 + s) / 2``."""
    h = model.linear / 2.0
    J = {}
    offset = model.offset + model.linear.sum() / 2.0
    for (i, j), c in model.quadratic.items():
        J[i, j] = c / 4.0
        h[i] += c / 4.0
        h[j] += c / 4.0
        offset += c / 4.0
    return h, J, offset


def all_bitvectors(num_vars: int) -> Iterable[np.ndarray]:
    """Every bit vector, lexicographic with bit 0 most significant, in chunks."""
    chunk = 1 << min(num_vars, 16)
    shifts = np.arange(num_vars - 1, -1, -1, dtype=np.int64)
    for start in range(0, 1 << num_vars, chunk):
        ints = np.arange(start, min(start + chunk, 1 << num_vars), dtype=np.int64)
        yield ((ints[:, None] >> shifts) & 1).astype(np.int8)
