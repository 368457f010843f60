"""Discrete causal Bayesian networks.

CPT layout: ``cpts[i]`` is a 2-D array with one row per configuration of
the parents of ``i`` (parents sorted by vertex id) and one column per value
of ``X_i``. Row index ``sum_k x[p_k] * prod_{l<k} d[p_l]``, so the
lowest-indexed parent varies fastest.

An intervention is applied by cutting the incoming edges of each target
and replacing its CPT by a single root row: one-hot on the target value
for a perfect intervention, or ``phi`` on the target value and the rest
spread uniformly over the other values when the intervention is imperfect.
"""
from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, GenerationError, ValidationError
from .graph import Dag
from .interventions import NO_INTERVENTION, InterventionSpec

log = logging.getLogger(__name__)

ROW_TOL = 1e-9
PMF_EQ_TOL = 1e-12
ENUMERATION_CAP = 10**7


class DiscreteCbn:
    """A DAG with a finite domain and a CPT per node. Immutable."""

    __slots__ = ("dag", "domain_sizes", "cpts", "_cdfs")

    def __init__(self, dag: Dag, domain_sizes: Sequence[int], cpts: Sequence):
        if len(domain_sizes) != dag.n or len(cpts) != dag.n:
            raise ValidationError("need one domain size and one CPT per node")
        sizes = tuple(int(d) for d in domain_sizes)
        if any(d < 1 for d in sizes):
            raise ValidationError("domain sizes must be positive")
        tables = []
        for i, cpt in enumerate(cpts):
            t = np.array(cpt, dtype=float)
            n_rows = math.prod(sizes[p] for p in dag.parents(i))
            if t.ndim == 1:
                t = t.reshape(1, -1)
            if t.shape != (n_rows, sizes[i]):
                raise ValidationError(
                    f"CPT of node {i} has shape {t.shape}, expected {(n_rows, sizes[i])}"
                )
            if not np.all(np.isfinite(t)) or np.any(t < 0):
                raise ValidationError(f"CPT of node {i} has negative or non-finite entries")
            sums = t.sum(axis=1)
            bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_TOL)
            if bad.size:
                raise ValidationError(
                    f"CPT of node {i}, row {int(bad[0])} sums to {sums[bad[0]]!r}"
                )
            t.flags.writeable = False
            tables.append(t)
        self.dag = dag
        self.domain_sizes = sizes
        self.cpts = tuple(tables)
        self._cdfs = None

    @property
    def n(self) -> int:
        return self.dag.n

    @property
    def r(self) -> int:
        return max(self.domain_sizes, default=0)

    def parents(self, i: int) -> tuple[int, ...]:
        return self.dag.parents(i)

    def cpt_row(self, i: int, parent_values: Sequence[int]) -> np.ndarray:
        return self.cpts[i][self.config_index(i, parent_values)]

    def config_index(self, i: int, parent_values: Sequence[int]) -> int:
        idx, stride = 0, 1
        for p, v in zip(self.parents(i), parent_values):
            idx += int(v) * stride
            stride *= self.domain_sizes[p]
        return idx

    def cdfs(self) -> tuple[np.ndarray, ...]:
        if self._cdfs is None:
            self._cdfs = tuple(np.cumsum(t, axis=1) for t in self.cpts)
        return self._cdfs

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiscreteCbn):
            return NotImplemented
        return (
            self.dag == other.dag
            and self.domain_sizes == other.domain_sizes
            and all(np.array_equal(a, b) for a, b in zip(self.cpts, other.cpts))
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"DiscreteCbn(n={self.n}, edges={self.dag.num_edges()}, r={self.r})"


def _root_row(d: int, value: int | None, phi: float = 1.0) -> np.ndarray:
    if value is None:
        return np.full(d, 1.0 / d)
    if not 0 <= value < d:
        raise ValidationError(f"intervention value {value} outside domain of size {d}")
    if phi >= 1.0 or d == 1:
        row = np.zeros(d)
    else:
        row = np.full(d, (1.0 - phi) / (d - 1))
    row[value] = min(phi, 1.0) if d > 1 else 1.0
    return row


def mutilate(cbn: DiscreteCbn, targets: Iterable[int]) -> DiscreteCbn:
    """Cut all edges into ``targets``; each target gets a uniform placeholder root row.

    The placeholder is overwritten by the intervention value when sampling.
    """
    targets = set(targets)
    if not targets:
        return cbn
    for t in targets:
        if not 0 <= t < cbn.n:
            raise ValidationError(f"target {t} out of range")
    dag = cbn.dag.without_incoming(targets)
    cpts = [
        _root_row(cbn.domain_sizes[i], None)[None, :] if i in targets else cbn.cpts[i]
        for i in range(cbn.n)
    ]
    return DiscreteCbn(dag, cbn.domain_sizes, cpts)


def intervene(cbn: DiscreteCbn, spec: InterventionSpec) -> DiscreteCbn:
    """The mutilated network with each target's root row set from ``spec``."""
    if not spec.values:
        return cbn
    if spec.spread:
        raise ValidationError("discrete networks take success probabilities, not spreads")
    values = spec.value_map()
    phis = spec.success_map()
    dag = cbn.dag.without_incoming(values)
    cpts = list(cbn.cpts)
    for node, v in values.items():
        if not 0 <= node < cbn.n:
            raise ValidationError(f"target {node} out of range")
        if float(v) != int(v):
            raise ValidationError(f"discrete intervention value must be an integer, got {v}")
        cpts[node] = _root_row(cbn.domain_sizes[node], int(v), phis.get(node, 1.0))[None, :]
    return DiscreteCbn(dag, cbn.domain_sizes, cpts)


def uniform_roots(cbn: DiscreteCbn, nodes: Iterable[int]) -> DiscreteCbn:
    """Cut edges into ``nodes`` and give each a uniform root distribution.

    Conditioning on ``X_S = x_S`` in this network equals intervening
    ``do(X_S = x_S)`` in the original one.
    """
    return mutilate(cbn, nodes)


def sample(
    cbn: DiscreteCbn,
    spec: InterventionSpec,
    m: int,
    seed: int,
    nodes: Sequence[int] | None = None,
) -> np.ndarray:
    """Ancestral sampling under ``spec``.

    Returns an ``(m, len(nodes))`` integer array (all nodes by default).
    Only ancestors of the requested nodes in the mutilated graph are drawn.
    """
    if m < 1:
        raise ValidationError("m must be >= 1")
    net = intervene(cbn, spec)
    wanted = list(range(cbn.n)) if nodes is None else [int(v) for v in nodes]
    needed = net.dag.ancestors(wanted)
    gen = np.random.default_rng(seed)
    cdfs = net.cdfs()
    dtype = np.int16 if cbn.r < 2**15 else np.int64
    out: dict[int, np.ndarray] = {}
    for v in net.dag.topological_order():
        if v not in needed:
            continue
        pa = net.parents(v)
        if pa:
            idx = np.zeros(m, dtype=np.int64)
            stride = 1
            for p in pa:
                idx += out[p].astype(np.int64) * stride
                stride *= net.domain_sizes[p]
            rows = cdfs[v][idx]
        else:
            rows = cdfs[v][0][None, :]
        u = gen.random(m)
        x = (u[:, None] >= rows[:, :-1]).sum(axis=1)
        out[v] = x.astype(dtype)
    return np.stack([out[v] for v in wanted], axis=1)


def _joint_over(net: DiscreteCbn, nodes: Sequence[int], cap: int) -> np.ndarray:
    """Brute-force marginal of ``nodes``: build the full joint of their ancestral set, then sum."""
    needed = net.dag.ancestors(nodes)
    order = [v for v in net.dag.topological_order() if v in needed]
    size = math.prod(net.domain_sizes[v] for v in order)
    if size > cap:
        raise CapacityError(
            f"enumeration needs {size} joint states over {len(order)} nodes (cap {cap})"
        )
    axis = {v: k for k, v in enumerate(order)}
    joint = np.ones(())
    axes: list[int] = []
    for v in order:
        pa = net.parents(v)
        shape = [net.domain_sizes[p] for p in reversed(pa)] + [net.domain_sizes[v]]
        factor = net.cpts[v].reshape(shape)
        factor_axes = [axis[p] for p in reversed(pa)] + [axis[v]]
        joint = np.einsum(joint, axes, factor, factor_axes, axes + [axis[v]])
        axes = axes + [axis[v]]
    return np.einsum(joint, axes, [axis[v] for v in nodes])


def joint_state_count(cbn: DiscreteCbn, spec: InterventionSpec, nodes: Sequence[int]) -> int:
    net_dag = cbn.dag.without_incoming(spec.targets)
    return math.prod(cbn.domain_sizes[v] for v in net_dag.ancestors(nodes))


def max_pair_states(cbn: DiscreteCbn) -> int:
    """Largest ancestral state space over all single-node path queries ``(i, j)``."""
    best = 1
    for i in range(cbn.n):
        dag = cbn.dag.without_incoming([i])
        for j in range(cbn.n):
            if i != j:
                best = max(best, math.prod(cbn.domain_sizes[v] for v in dag.ancestors([i, j])))
    return best


def exact_joint(
    cbn: DiscreteCbn,
    nodes: Sequence[int],
    spec: InterventionSpec = NO_INTERVENTION,
    cap: int = ENUMERATION_CAP,
) -> np.ndarray:
    """Exact joint PMF of ``nodes`` under ``spec``, shape ``(d[nodes[0]], d[nodes[1]], ...)``."""
    nodes = [int(v) for v in nodes]
    if len(set(nodes)) != len(nodes):
        raise ValidationError("nodes must be distinct")
    return _joint_over(intervene(cbn, spec), nodes, cap)


def exact_interventional_marginal(
    cbn: DiscreteCbn,
    j: int,
    spec: InterventionSpec = NO_INTERVENTION,
    cap: int = ENUMERATION_CAP,
) -> np.ndarray:
    """Exact ``p(X_j | do(spec))`` by enumerating the mutilated joint."""
    return exact_joint(cbn, [j], spec, cap)


def interventional_table(
    cbn: DiscreteCbn, S: Sequence[int], j: int, cap: int = ENUMERATION_CAP
) -> np.ndarray:
    """``p(X_j | do(X_S = x_S))`` for every ``x_S``; shape ``(d[S[0]], ..., d[j])``."""
    S = [int(s) for s in S]
    if j in S:
        raise ValidationError("target cannot be intervened")
    net = uniform_roots(cbn, S)
    joint = _joint_over(net, S + [j], cap)
    weight = math.prod(cbn.domain_sizes[s] for s in S)
    return joint * weight


def _min_unequal_gap(rows: np.ndarray) -> float | None:
    """Smallest L-inf distance among pairs of rows that differ; None if all rows are equal."""
    best = math.inf
    R = rows.shape[0]
    chunk = max(1, 2**22 // max(1, R * rows.shape[1]))
    for s in range(0, R, chunk):
        block = rows[s : s + chunk]
        d = np.abs(block[:, None, :] - rows[None, :, :]).max(axis=2)
        d = d[d >= PMF_EQ_TOL]
        if d.size:
            best = min(best, float(d.min()))
    return None if best == math.inf else best


@dataclass(frozen=True)
class GammaResult:
    """Identifiability margin. ``faithful`` is False when some parent has no effect."""

    value: float
    faithful: bool
    witness: tuple | None = None


def compute_gamma(cbn: DiscreteCbn, cap: int = ENUMERATION_CAP) -> GammaResult:
    """Minimum L-inf gap between distinct ``p(X_j | do(X_i = x))`` over all edges (i, j)."""
    best, witness = math.inf, None
    for i, j in cbn.dag.sorted_edges():
        table = interventional_table(cbn, [i], j, cap)
        gap = _min_unequal_gap(table)
        if gap is None:
            return GammaResult(0.0, False, (i, j))
        if gap < best:
            best, witness = gap, (i, j)
    if witness is None:
        return GammaResult(math.inf, True, None)
    return GammaResult(best, True, witness)


def compute_gamma_transitive(cbn: DiscreteCbn, cap: int = ENUMERATION_CAP) -> GammaResult:
    """As :func:`compute_gamma`, but over every non-empty subset S of each parent set.

    Exponential in the maximum in-degree.
    """
    best, witness = math.inf, None
    for j in range(cbn.n):
        pa = cbn.parents(j)
        for k in range(1, len(pa) + 1):
            for S in itertools.combinations(pa, k):
                table = interventional_table(cbn, S, j, cap)
                gap = _min_unequal_gap(table.reshape(-1, cbn.domain_sizes[j]))
                if gap is None:
                    return GammaResult(0.0, False, (S, j))
                if gap < best:
                    best, witness = gap, (S, j)
    if witness is None:
        return GammaResult(math.inf, True, None)
    return GammaResult(best, True, witness)


def random_cpts(g: Dag, domain_sizes: Sequence[int], gen: np.random.Generator) -> list[np.ndarray]:
    cpts = []
    for i in range(g.n):
        n_rows = math.prod(domain_sizes[p] for p in g.parents(i))
        rows = gen.dirichlet(np.ones(domain_sizes[i]), size=n_rows)
        cpts.append(rows / rows.sum(axis=1, keepdims=True))
    return cpts


def random_discrete_cbn(
    g: Dag,
    r_max: int,
    gamma_floor: float,
    seed: int,
    max_retries: int = 1000,
    cap: int = ENUMERATION_CAP,
) -> DiscreteCbn:
    """Random CBN on ``g``: domain sizes uniform on {2..r_max}, CPT rows uniform on the simplex.

    Whole networks are redrawn until ``compute_gamma >= gamma_floor``.
    """
    if r_max < 2:
        raise ValidationError("r_max must be >= 2")
    gen = np.random.default_rng(seed)
    for attempt in range(max_retries):
        sizes = gen.integers(2, r_max + 1, size=g.n).tolist()
        cbn = DiscreteCbn(g, sizes, random_cpts(g, sizes, gen))
        gamma = compute_gamma(cbn, cap)
        if gamma.faithful and gamma.value >= gamma_floor:
            if attempt:
                log.debug("random_discrete_cbn accepted after %d rejections", attempt)
            return cbn
    raise GenerationError(
        f"no network with gamma >= {gamma_floor} after {max_retries} attempts"
    )
