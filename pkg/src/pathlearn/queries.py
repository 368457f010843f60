"""Noisy path and transitive queries, samplers that feed them, and noiseless oracles.

A query only sees a :class:`Sampler`, so the same code runs against a
simulated discrete network, a simulated linear network, or recorded data.

Seeds: a query called with ``seed`` draws the samples for intervention
value ``x_i`` from ``derive_seed(seed, x_i)``; a transitive query uses
``derive_seed(seed, *x_S, x_i)``, so with ``S`` empty it reproduces the
path query bit for bit. The query factories derive ``seed`` per pair as
``derive_seed(root, phase, i, j)`` with phase 0 for path queries and 1 for
transitive queries.
"""
from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import asgn as asgn_mod
from . import discrete_cbn as dcbn
from .asgn import AsgnNetwork
from .discrete_cbn import ENUMERATION_CAP, PMF_EQ_TOL, DiscreteCbn
from .errors import CapacityError, DegenerateSampleError, ValidationError
from .graph import Dag, transitive_closure
from .interventions import InterventionSpec
from .seeding import derive_seed

PATH_PHASE = 0
TRANSITIVE_PHASE = 1
EXACT_SAMPLER_LIMIT = 2_000_000
CHUNK_ROWS = 1 << 20


@dataclass(frozen=True)
class QueryOutcome:
    """Answer of one noisy query plus its cost and test statistic."""

    answer: bool
    samples_used: int
    max_gap: float

    def __bool__(self) -> bool:
        return self.answer


# --------------------------------------------------------------------------- samplers


class Sampler(ABC):
    """Interventional data source. Calls are pure functions of their arguments."""

    n: int

    @abstractmethod
    def sample(self, spec: InterventionSpec, nodes: Sequence[int], m: int, seed: int) -> np.ndarray:
        """``(m, len(nodes))`` array of draws under ``spec``."""

    def domain_size(self, node: int) -> int:
        raise ValidationError(f"{type(self).__name__} has no finite domains")

    def counts(self, spec: InterventionSpec, nodes: Sequence[int], m: int, seed: int) -> np.ndarray:
        """Joint histogram of ``nodes`` over ``m`` draws; shape ``(d[nodes[0]], ...)``.

        Above ``CHUNK_ROWS`` draws, chunk k uses ``derive_seed(seed, k)``.
        """
        dims = tuple(self.domain_size(v) for v in nodes)
        total = np.zeros(math.prod(dims), dtype=np.int64)
        for size, s in _chunks(m, seed):
            x = self.sample(spec, nodes, size, s)
            flat = np.ravel_multi_index(tuple(x.T.astype(np.int64)), dims)
            total += np.bincount(flat, minlength=total.size)
        return total.reshape(dims)

    def mean(self, spec: InterventionSpec, node: int, m: int, seed: int) -> float:
        """Sample mean of ``node`` over ``m`` draws (chunked like :meth:`counts`)."""
        acc = 0.0
        for size, s in _chunks(m, seed):
            acc += float(np.sum(self.sample(spec, [node], size, s)[:, 0]))
        return acc / m


def _chunks(m: int, seed: int):
    if m <= CHUNK_ROWS:
        yield m, seed
        return
    for k, start in enumerate(range(0, m, CHUNK_ROWS)):
        yield min(CHUNK_ROWS, m - start), derive_seed(seed, k)


def _phi_spec(spec: InterventionSpec, success) -> InterventionSpec:
    if success is None or not spec.values:
        return spec
    return spec.with_success(success)


class CbnSampler(Sampler):
    """Simulated interventions on a discrete network.

    ``success`` makes every intervention imperfect (scalar or per-node
    mapping). ``method`` picks how histograms are produced: ``"ancestral"``
    draws and tallies full samples, ``"exact"`` draws the histogram in one
    multinomial step from the exact joint under the intervention (the same
    distribution, far cheaper at large ``m``), and ``"auto"`` uses the exact
    route when the ancestral state space has at most ``exact_limit`` states.
    """

    def __init__(
        self,
        cbn: DiscreteCbn,
        success=None,
        method: str = "auto",
        exact_limit: int = EXACT_SAMPLER_LIMIT,
    ):
        if method not in ("auto", "exact", "ancestral"):
            raise ValidationError(f"unknown sampling method {method!r}")
        self.cbn = cbn
        self.n = cbn.n
        self.success = success
        self.method = method
        self.exact_limit = exact_limit if method == "auto" else ENUMERATION_CAP
        self._tables: dict[tuple, np.ndarray | None] = {}

    def domain_size(self, node: int) -> int:
        return self.cbn.domain_sizes[node]

    def sample(self, spec, nodes, m, seed):
        return dcbn.sample(self.cbn, _phi_spec(spec, self.success), m, seed, nodes)

    def _conditional_table(self, S: tuple, others: tuple) -> np.ndarray | None:
        key = (S, others)
        if key not in self._tables:
            dag = self.cbn.dag.without_incoming(S)
            states = math.prod(self.cbn.domain_sizes[v] for v in dag.ancestors(S + others))
            if states > self.exact_limit:
                self._tables[key] = None
            else:
                net = dcbn.uniform_roots(self.cbn, S)
                joint = dcbn._joint_over(net, list(S + others), ENUMERATION_CAP)
                self._tables[key] = joint * math.prod(self.cbn.domain_sizes[s] for s in S)
        return self._tables[key]

    def exact_pmf(self, spec: InterventionSpec, nodes: Sequence[int]) -> np.ndarray | None:
        """Exact joint PMF of ``nodes`` under ``spec``, or None above the exact limit."""
        spec = _phi_spec(spec, self.success)
        values = spec.value_map()
        phis = spec.success_map()
        S = tuple(sorted(values))
        nodes = [int(v) for v in nodes]
        others = tuple(dict.fromkeys(v for v in nodes if v not in values))
        table = self._conditional_table(S, others)
        if table is None:
            return None
        sizes = self.cbn.domain_sizes
        joint = table
        for axis, s in enumerate(S):
            row = dcbn._root_row(sizes[s], int(values[s]), phis.get(s, 1.0))
            shape = [1] * table.ndim
            shape[axis] = sizes[s]
            joint = joint * row.reshape(shape)
        labels = list(S) + list(others)
        keep = [labels.index(v) for v in nodes]
        drop = tuple(a for a in range(len(labels)) if a not in keep)
        joint = joint.sum(axis=drop) if drop else joint
        kept = sorted(keep)
        return np.transpose(joint, [kept.index(a) for a in keep])

    def counts(self, spec, nodes, m, seed):
        if m < 1:
            raise ValidationError("m must be >= 1")
        if self.method != "ancestral":
            p = self.exact_pmf(spec, nodes)
            if p is not None:
                flat = np.clip(p.ravel(), 0.0, None)
                flat = flat / flat.sum()
                return np.random.default_rng(seed).multinomial(m, flat).reshape(p.shape)
            if self.method == "exact":
                raise CapacityError(f"exact sampling of {list(nodes)} exceeds the state cap")
        return super().counts(spec, nodes, m, seed)


class AsgnSampler(Sampler):
    """Simulated interventions on a linear network.

    ``spread`` (per-node mapping or sequence of nu^2) makes every
    intervention imperfect. With Gaussian noise and ``method="auto"`` the
    sample mean is drawn directly from its exact law
    ``N(mu, var / m)``; ``method="forward"`` always simulates.
    """

    def __init__(self, net: AsgnNetwork, spread=None, method: str = "auto"):
        if method not in ("auto", "forward"):
            raise ValidationError(f"unknown sampling method {method!r}")
        self.net = net
        self.n = net.n
        self.method = method
        if spread is not None and not isinstance(spread, Mapping):
            spread = {k: float(v) for k, v in enumerate(np.asarray(spread, dtype=float))}
        self.spread = spread

    def _spec(self, spec):
        if self.spread is not None and spec.values:
            return spec.with_spread(self.spread)
        return spec

    def sample(self, spec, nodes, m, seed):
        return asgn_mod.sample(self.net, self._spec(spec), m, seed, nodes)

    def mean(self, spec, node, m, seed):
        if self.method == "forward" or self.net.noise_kind != "gaussian":
            return super().mean(spec, node, m, seed)
        if m < 1:
            raise ValidationError("m must be >= 1")
        mu, var = asgn_mod.analytic_moments(self.net, node, self._spec(spec))
        return float(np.random.default_rng(seed).normal(mu, math.sqrt(var / m)))


class RecordedSampler(Sampler):
    """Serves fixed datasets, one per intervention.

    ``datasets`` maps a tuple of ``(node, value)`` pairs (sorted by node;
    empty for observational data) to an ``(N, n)`` array. A request for
    ``m`` rows takes a seed-determined subset without replacement.
    """

    def __init__(self, n: int, datasets: Mapping, domain_sizes: Sequence[int] | None = None):
        self.n = int(n)
        self.domain_sizes = None if domain_sizes is None else tuple(int(d) for d in domain_sizes)
        self.datasets = {}
        for key, data in datasets.items():
            arr = np.asarray(data)
            if arr.ndim != 2 or arr.shape[1] != self.n:
                raise ValidationError(f"dataset {key} must have shape (N, {self.n})")
            self.datasets[tuple(sorted((int(k), float(v)) for k, v in key))] = arr

    def domain_size(self, node: int) -> int:
        if self.domain_sizes is None:
            return super().domain_size(node)
        return self.domain_sizes[node]

    def sample(self, spec, nodes, m, seed):
        key = tuple((k, float(v)) for k, v in spec.values)
        if key not in self.datasets:
            raise ValidationError(f"no recorded data for intervention {dict(key)}")
        data = self.datasets[key]
        if m > data.shape[0]:
            raise ValidationError(f"requested {m} rows but only {data.shape[0]} recorded for {dict(key)}")
        if m == data.shape[0]:
            rows = data
        else:
            idx = np.sort(np.random.default_rng(seed).choice(data.shape[0], m, replace=False))
            rows = data[idx]
        return rows[:, list(nodes)]


# --------------------------------------------------------------------------- query algorithms


def _max_pairwise_linf(pmfs: Sequence[np.ndarray]) -> float:
    P = np.asarray(pmfs)
    if len(P) < 2:
        return 0.0
    return float(np.abs(P[:, None, :] - P[None, :, :]).max())


def _check_pair(i: int, j: int, n: int | None = None):
    if i == j:
        raise ValidationError("query is undefined for i == j")
    if n is not None and not (0 <= i < n and 0 <= j < n):
        raise ValidationError(f"pair ({i}, {j}) out of range")


def _threshold(gamma: float, threshold: float | None) -> float:
    if threshold is not None:
        if threshold <= 0:
            raise ValidationError("threshold must be positive")
        return float(threshold)
    if not gamma > 0:
        raise ValidationError("gamma must be positive")
    return gamma / 2.0


def path_query_discrete(
    sampler: Sampler,
    i: int,
    j: int,
    m: int,
    gamma: float,
    threshold: float | None = None,
    seed: int = 0,
) -> QueryOutcome:
    """Compare empirical PMFs of X_j across every ``do(X_i = x)``.

    Answers 1 iff two of them differ by more than ``threshold`` in L-inf
    norm (default ``gamma / 2``; pass ``threshold=gamma`` for the stricter
    literal rule).
    """
    return transitive_query_discrete(sampler, i, j, (), m, gamma, threshold, seed)


def transitive_query_discrete(
    sampler: Sampler,
    i: int,
    j: int,
    S: Sequence[int],
    m: int,
    gamma: float,
    threshold: float | None = None,
    seed: int = 0,
    cap: int = ENUMERATION_CAP,
) -> QueryOutcome:
    """Sweep ``x_i`` under every joint assignment ``x_S`` of the conditioning set.

    Each ``x_S`` gets its own list of PMFs; the query stops with answer 1 at
    the first ``x_S`` whose list contains a pair further apart than the
    threshold.
    """
    _check_pair(i, j, sampler.n)
    S = tuple(int(s) for s in S)
    if i in S or j in S:
        raise ValidationError("i and j must not be in the conditioning set")
    if m < 1:
        raise ValidationError("m must be >= 1")
    tau = _threshold(gamma, threshold)
    d_i = sampler.domain_size(i)
    if d_i < 2:
        raise ValidationError(f"node {i} has domain size {d_i}; need at least 2")
    dims = [sampler.domain_size(s) for s in S]
    if math.prod(dims) * d_i > cap:
        raise CapacityError(
            f"transitive query ({i}, {j}) with |S| = {len(S)} needs {math.prod(dims) * d_i} "
            f"interventions (cap {cap})"
        )
    used, best = 0, 0.0
    for x_S in itertools.product(*(range(d) for d in dims)):
        pmfs = []
        for x in range(d_i):
            spec = InterventionSpec.do({**dict(zip(S, x_S)), i: x})
            c = sampler.counts(spec, [j], m, derive_seed(seed, *x_S, x))
            pmfs.append(c / m)
            used += m
        gap = _max_pairwise_linf(pmfs)
        best = max(best, gap)
        if gap > tau:
            return QueryOutcome(True, used, best)
    return QueryOutcome(False, used, best)


def path_query_discrete_imperfect(
    sampler: Sampler,
    i: int,
    j: int,
    m: int,
    gamma: float,
    threshold: float | None = None,
    seed: int = 0,
) -> QueryOutcome:
    """Path query when interventions may miss their target value.

    Draws paired ``(x_i, x_j)`` samples and estimates each PMF only from the
    rows where ``X_i`` actually took the requested value.
    """
    _check_pair(i, j, sampler.n)
    if m < 1:
        raise ValidationError("m must be >= 1")
    tau = _threshold(gamma, threshold)
    d_i = sampler.domain_size(i)
    if d_i < 2:
        raise ValidationError(f"node {i} has domain size {d_i}; need at least 2")
    pmfs = []
    for x in range(d_i):
        c = sampler.counts(InterventionSpec.do({i: x}), [i, j], m, derive_seed(seed, x))
        hits = c[x]
        total = hits.sum()
        if total == 0:
            raise DegenerateSampleError(
                f"do(X_{i} = {x}) never took effect in {m} samples; increase m"
            )
        pmfs.append(hits / total)
    gap = _max_pairwise_linf(pmfs)
    return QueryOutcome(gap > tau, d_i * m, gap)


def path_query_continuous(
    sampler: Sampler, i: int, j: int, m: int, z: float, seed: int = 0
) -> QueryOutcome:
    """Intervene ``X_i = z``; answer 1 iff the sample mean of X_j exceeds 1/2 in magnitude."""
    return transitive_query_continuous(sampler, i, j, (), m, 0.0, z, seed)


def transitive_query_continuous(
    sampler: Sampler,
    i: int,
    j: int,
    S: Sequence[int],
    m: int,
    z1: float,
    z2: float,
    seed: int = 0,
) -> QueryOutcome:
    """Intervene ``X_S = z1`` and ``X_i = z2``; threshold the mean of X_j at 1/2."""
    _check_pair(i, j, sampler.n)
    S = tuple(int(s) for s in S)
    if i in S or j in S:
        raise ValidationError("i and j must not be in the conditioning set")
    if m < 1:
        raise ValidationError("m must be >= 1")
    if not (math.isfinite(z1) and math.isfinite(z2)):
        raise ValidationError("intervention values must be finite")
    spec = InterventionSpec.do({**{s: z1 for s in S}, i: z2})
    mu = sampler.mean(spec, j, m, seed)
    return QueryOutcome(abs(mu) > 0.5, m, abs(mu))


# --------------------------------------------------------------------------- query factories


class _BatchCache:
    """Holds the shared all-node samples for the current source node in batched mode."""

    def __init__(self):
        self.key = None
        self.data: dict = {}

    def get(self, i, x, build):
        if self.key != i:
            self.key, self.data = i, {}
        if x not in self.data:
            self.data[x] = build()
        return self.data[x]


@dataclass
class DiscretePathQuery:
    """Callable ``(i, j) -> QueryOutcome`` for the structure learner.

    ``imperfect`` switches to the conditional estimator. ``batched`` reuses
    one set of all-node samples per ``do(X_i = x)`` across every target j.
    """

    sampler: Sampler
    m: int
    gamma: float
    threshold: float | None = None
    seed: int = 0
    imperfect: bool = False
    batched: bool = False
    _cache: _BatchCache = field(default_factory=_BatchCache, repr=False)

    def __call__(self, i: int, j: int) -> QueryOutcome:
        if not self.batched:
            fn = path_query_discrete_imperfect if self.imperfect else path_query_discrete
            return fn(
                self.sampler, i, j, self.m, self.gamma, self.threshold,
                derive_seed(self.seed, PATH_PHASE, i, j),
            )
        _check_pair(i, j, self.sampler.n)
        tau = _threshold(self.gamma, self.threshold)
        d_i = self.sampler.domain_size(i)
        d_j = self.sampler.domain_size(j)
        pmfs = []
        for x in range(d_i):
            data = self._cache.get(
                i, x,
                lambda: self.sampler.sample(
                    InterventionSpec.do({i: x}), range(self.sampler.n), self.m,
                    derive_seed(self.seed, PATH_PHASE, i, x),
                ),
            )
            col = data[:, j].astype(np.int64)
            if self.imperfect:
                col = col[data[:, i] == x]
                if col.size == 0:
                    raise DegenerateSampleError(f"do(X_{i} = {x}) never took effect")
            pmfs.append(np.bincount(col, minlength=d_j) / col.size)
        gap = _max_pairwise_linf(pmfs)
        return QueryOutcome(gap > tau, d_i * self.m, gap)


@dataclass
class ContinuousPathQuery:
    """Callable ``(i, j) -> QueryOutcome`` with intervention magnitude ``z``."""

    sampler: Sampler
    m: int
    z: float
    seed: int = 0
    batched: bool = False
    _cache: _BatchCache = field(default_factory=_BatchCache, repr=False)

    def __call__(self, i: int, j: int) -> QueryOutcome:
        if not self.batched:
            return path_query_continuous(
                self.sampler, i, j, self.m, self.z, derive_seed(self.seed, PATH_PHASE, i, j)
            )
        _check_pair(i, j, self.sampler.n)
        data = self._cache.get(
            i, 0,
            lambda: self.sampler.sample(
                InterventionSpec.do({i: self.z}), range(self.sampler.n), self.m,
                derive_seed(self.seed, PATH_PHASE, i),
            ),
        )
        mu = float(np.mean(data[:, j]))
        return QueryOutcome(abs(mu) > 0.5, self.m, abs(mu))


@dataclass
class DiscreteTransitiveQuery:
    """Callable ``(i, j, S) -> QueryOutcome``."""

    sampler: Sampler
    m: int
    gamma: float
    threshold: float | None = None
    seed: int = 0
    cap: int = ENUMERATION_CAP

    def __call__(self, i: int, j: int, S: Sequence[int]) -> QueryOutcome:
        return transitive_query_discrete(
            self.sampler, i, j, sorted(S), self.m, self.gamma, self.threshold,
            derive_seed(self.seed, TRANSITIVE_PHASE, i, j), self.cap,
        )


@dataclass
class ContinuousTransitiveQuery:
    """Callable ``(i, j, S) -> QueryOutcome`` with ``X_S = z1`` and ``X_i = z2``."""

    sampler: Sampler
    m: int
    z2: float
    z1: float = 0.0
    seed: int = 0

    def __call__(self, i: int, j: int, S: Sequence[int]) -> QueryOutcome:
        return transitive_query_continuous(
            self.sampler, i, j, sorted(S), self.m, self.z1, self.z2,
            derive_seed(self.seed, TRANSITIVE_PHASE, i, j),
        )


# --------------------------------------------------------------------------- oracles


class PathOracle:
    """Noiseless path queries read from the true graph's reachability."""

    def __init__(self, dag: Dag):
        self.reach = transitive_closure(dag)

    def __call__(self, i: int, j: int) -> bool:
        _check_pair(i, j)
        return bool(self.reach[i, j])


class TransitiveOracle:
    """Noiseless transitive queries: is there an i -> j path that avoids S?"""

    def __init__(self, dag: Dag):
        self.dag = dag

    def __call__(self, i: int, j: int, S: Sequence[int]) -> bool:
        _check_pair(i, j)
        cut = self.dag.without_incoming(S)
        return bool(transitive_closure(cut)[i, j])


class ExactDiscreteTransitiveOracle:
    """Transitive query answered from exact interventional tables.

    Returns True iff, for some ``x_S``, two values of ``x_i`` give distinct
    exact PMFs of ``X_j``. With ``S`` empty this is the exact path query.
    """

    def __init__(self, cbn: DiscreteCbn, cap: int = ENUMERATION_CAP):
        self.cbn = cbn
        self.cap = cap

    def __call__(self, i: int, j: int, S: Sequence[int] = ()) -> bool:
        _check_pair(i, j)
        S = sorted(S)
        table = dcbn.interventional_table(self.cbn, S + [i], j, self.cap)
        d_i, d_j = self.cbn.domain_sizes[i], self.cbn.domain_sizes[j]
        rows = table.reshape(-1, d_i, d_j)
        spread = (rows.max(axis=1) - rows.min(axis=1)).max()
        return bool(spread >= PMF_EQ_TOL)


class ExactAsgnTransitiveOracle:
    """Transitive query answered from analytic means of X_j under ``do(X_S = 0, X_i = 1)``."""

    def __init__(self, net: AsgnNetwork, tol: float = 1e-12):
        self.net = net
        self.tol = tol

    def __call__(self, i: int, j: int, S: Sequence[int] = ()) -> bool:
        _check_pair(i, j)
        spec = InterventionSpec.do({**{s: 0.0 for s in S}, i: 1.0})
        mean, _ = asgn_mod.analytic_moments(self.net, j, spec)
        return abs(mean) > self.tol
