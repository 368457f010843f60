"""Linear networks with additive sub-Gaussian noise.

The model is ``X = W X + N``: ``W[i, j]`` is the weight of the edge
``j -> i`` and the noises ``N_i`` are independent, zero-mean, with variance
``sigma_i^2``. Intervening on a set S zeroes the rows of S in ``W`` and
replaces ``N_s`` by the intervention value (plus a zero-mean draw of
variance ``nu_s^2`` when the intervention is imperfect).
"""
from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, GenerationError, ValidationError
from .graph import Dag
from .interventions import NO_INTERVENTION, InterventionSpec

NOISE_KINDS = ("gaussian", "uniform")
WMIN_TOL = 1e-12
MAX_SUBSET_INDEGREE = 20


class AsgnNetwork:
    """DAG plus weight matrix and per-node noise variances. Immutable."""

    __slots__ = ("dag", "W", "noise_variances", "noise_kind")

    def __init__(
        self,
        dag: Dag,
        W,
        noise_variances: Sequence[float],
        noise_kind: str = "gaussian",
    ):
        n = dag.n
        W = np.array(W, dtype=float).reshape(n, n)
        var = np.array(noise_variances, dtype=float).reshape(n)
        if noise_kind not in NOISE_KINDS:
            raise ValidationError(f"noise_kind must be one of {NOISE_KINDS}")
        if not np.all(np.isfinite(W)):
            raise ValidationError("weights must be finite")
        if np.any(~np.isfinite(var)) or np.any(var <= 0):
            raise ValidationError("noise variances must be positive and finite")
        support = W != 0
        if not np.array_equal(support, dag.adjacency().T):
            raise ValidationError("nonzero pattern of W must equal the transposed adjacency")
        W.flags.writeable = False
        var.flags.writeable = False
        self.dag = dag
        self.W = W
        self.noise_variances = var
        self.noise_kind = noise_kind

    @property
    def n(self) -> int:
        return self.dag.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, AsgnNetwork):
            return NotImplemented
        return (
            self.dag == other.dag
            and np.array_equal(self.W, other.W)
            and np.array_equal(self.noise_variances, other.noise_variances)
            and self.noise_kind == other.noise_kind
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"AsgnNetwork(n={self.n}, edges={self.dag.num_edges()}, noise={self.noise_kind})"


def mutilate_weights(net: AsgnNetwork, targets: Iterable[int]) -> np.ndarray:
    """Copy of W with the rows of ``targets`` zeroed."""
    W = np.array(net.W)
    idx = sorted(set(targets))
    if idx:
        W[idx, :] = 0.0
    return W


def total_effects(net: AsgnNetwork, targets: Iterable[int] = ()) -> np.ndarray:
    """``(I - W_S)^-1`` for the network mutilated at ``targets``."""
    return np.linalg.inv(np.eye(net.n) - mutilate_weights(net, targets))


def _noise(kind: str, gen: np.random.Generator, var: float, m: int) -> np.ndarray:
    if kind == "gaussian":
        return gen.normal(0.0, math.sqrt(var), size=m)
    half = math.sqrt(3.0 * var)
    return gen.uniform(-half, half, size=m)


def sample(
    net: AsgnNetwork,
    spec: InterventionSpec,
    m: int,
    seed: int,
    nodes: Sequence[int] | None = None,
) -> np.ndarray:
    """Forward sampling over the mutilated graph; ``(m, len(nodes))`` floats."""
    if m < 1:
        raise ValidationError("m must be >= 1")
    if spec.success:
        raise ValidationError("continuous networks take spreads, not success probabilities")
    values = spec.value_map()
    spread = spec.spread_map()
    for v, x in values.items():
        if not 0 <= v < net.n:
            raise ValidationError(f"target {v} out of range")
        if not math.isfinite(x):
            raise ValidationError("intervention values must be finite")
    dag = net.dag.without_incoming(values)
    wanted = list(range(net.n)) if nodes is None else [int(v) for v in nodes]
    needed = dag.ancestors(wanted)
    gen = np.random.default_rng(seed)
    out: dict[int, np.ndarray] = {}
    for v in dag.topological_order():
        if v not in needed:
            continue
        if v in values:
            x = np.full(m, float(values[v]))
            if spread.get(v, 0.0) > 0:
                x += _noise(net.noise_kind, gen, spread[v], m)
        else:
            x = _noise(net.noise_kind, gen, net.noise_variances[v], m)
            for p in dag.parents(v):
                x += net.W[v, p] * out[p]
        out[v] = x
    return np.stack([out[v] for v in wanted], axis=1)


def analytic_moments(
    net: AsgnNetwork, j: int, spec: InterventionSpec = NO_INTERVENTION
) -> tuple[float, float]:
    """Exact mean and variance of ``X_j`` under ``spec``."""
    values = spec.value_map()
    spread = spec.spread_map()
    B = total_effects(net, values)
    row = B[j]
    mean = sum(row[s] * v for s, v in values.items())
    var = 0.0
    for p in range(net.n):
        if p in values:
            var += row[p] ** 2 * spread.get(p, 0.0)
        else:
            var += row[p] ** 2 * net.noise_variances[p]
    return float(mean), float(var)


def max_sq_row_norm(B: np.ndarray) -> float:
    """Largest squared l2 norm over the rows of B."""
    if B.size == 0:
        return 0.0
    return float(np.max(np.sum(B * B, axis=1)))


@dataclass(frozen=True)
class AsgnConstants:
    """Intervention magnitude and variance bound used by the continuous planners.

    ``faithful`` is False when ``w_min`` vanishes; ``z`` is then None.
    """

    w_min: float
    w_max: float
    sigma_ub: float
    z: float | None
    faithful: bool


def _constants(net: AsgnNetwork, w_min: float, w_max: float) -> AsgnConstants:
    sigma_ub = float(np.max(net.noise_variances, initial=0.0)) * w_max
    if w_min < WMIN_TOL:
        return AsgnConstants(w_min, w_max, sigma_ub, None, False)
    return AsgnConstants(w_min, w_max, sigma_ub, 1.0 / w_min, True)


def compute_wmin_wmax(net: AsgnNetwork) -> AsgnConstants:
    """Constants for path queries.

    ``w_min`` is the smallest total effect ``|(I - W_i)^-1 [j, i]|`` over
    edges ``(i, j)``; ``w_max`` is the largest squared row norm of the
    total-effect matrix over the unmutilated network and every single-node
    mutilation. With no edges ``w_min`` is infinite and ``z`` is 0.
    """
    w_max = max_sq_row_norm(total_effects(net))
    w_min = math.inf
    for i in range(net.n):
        B = total_effects(net, [i])
        w_max = max(w_max, max_sq_row_norm(B))
        for j in net.dag.children(i):
            w_min = min(w_min, abs(B[j, i]))
    return _constants(net, w_min, w_max)


def compute_wmin_wmax_transitive(net: AsgnNetwork) -> AsgnConstants:
    """Constants for transitive queries.

    ``w_min`` is the smallest nonzero ``|W|``; ``w_max`` ranges over the
    unmutilated network and every mutilation by a subset of a parent set.
    """
    indeg = max((len(net.dag.parents(j)) for j in range(net.n)), default=0)
    if indeg > MAX_SUBSET_INDEGREE:
        raise CapacityError(
            f"in-degree {indeg} exceeds the subset enumeration cap {MAX_SUBSET_INDEGREE}"
        )
    nz = np.abs(net.W[net.W != 0])
    w_min = float(nz.min()) if nz.size else math.inf
    w_max = max_sq_row_norm(total_effects(net))
    seen = {()}
    for j in range(net.n):
        pa = net.dag.parents(j)
        for k in range(1, len(pa) + 1):
            for S in itertools.combinations(pa, k):
                if S in seen:
                    continue
                seen.add(S)
                w_max = max(w_max, max_sq_row_norm(total_effects(net, S)))
    return _constants(net, w_min, w_max)


def random_asgn(
    g: Dag,
    seed: int,
    weight_range: tuple[float, float] = (0.01, 1.25),
    variance_range: tuple[float, float] = (1.0, 5.0),
    norm_bound: float = 20.0,
    noise_kind: str = "gaussian",
    max_retries: int = 1000,
) -> AsgnNetwork:
    """Random weights with uniform magnitude and random sign, uniform noise variances.

    Redrawn until the squared row norm bound holds for ``(I - W)^-1`` and
    ``w_min`` is positive.
    """
    gen = np.random.default_rng(seed)
    lo, hi = weight_range
    rows, cols = [], []
    for a, b in g.sorted_edges():
        rows.append(b)
        cols.append(a)
    for _ in range(max_retries):
        W = np.zeros((g.n, g.n))
        mag = gen.uniform(lo, hi, size=len(rows))
        sign = np.where(gen.random(len(rows)) < 0.5, -1.0, 1.0)
        W[rows, cols] = mag * sign
        var = gen.uniform(*variance_range, size=g.n)
        net = AsgnNetwork(g, W, var, noise_kind)
        if max_sq_row_norm(total_effects(net)) > norm_bound:
            continue
        if compute_wmin_wmax(net).faithful:
            return net
    raise GenerationError(f"no admissible weights after {max_retries} attempts")
