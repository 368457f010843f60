"""Structure learners and sample-size planners.

``learn_tr`` asks a path query for every ordered pair and reduces the
answer graph; ``learn_transitive_edges`` then walks a topological order of
the reduced graph and asks transitive queries to put back the edges the
reduction removed.

Planner constants are the explicit ones from the concentration arguments,
not asymptotic forms:

* discrete: ``tau = gamma/2``, ``m = ceil(32/tau^2 (2 ln n + ln(2r/delta)))``
* continuous: ``m = ceil(8 sigma_ub (2 ln n + ln(2/delta)))``
* imperfect discrete: ``t = gamma/8``, ``L = r n^2``,
  ``m = ceil(4/(alpha t^2) ln(4L/delta))``
* transitive discrete: as discrete with ``r`` replaced by ``r^(k+1)``, where
  k bounds the size of the conditioning set.
"""
from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field

from .errors import CycleError, CyclicAnswerError, FaithfulnessError, ValidationError
from .graph import Dag, transitive_reduction

REGIMES = (
    "discrete",
    "continuous",
    "discrete-imperfect",
    "continuous-imperfect",
    "transitive-discrete",
    "transitive-continuous",
)


@dataclass(frozen=True)
class SampleSizePlan:
    regime: str
    m_per_distribution: int
    m_per_query: int
    distributions_per_query: int
    inputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _positive(name, value):
    if value is None:
        raise ValidationError(f"{name} is required for this regime")
    if value == 0:
        raise FaithfulnessError(f"{name} = 0: the network is unfaithful, no sample size suffices")
    if not value > 0 or not math.isfinite(value):
        raise ValidationError(f"{name} must be positive and finite, got {value}")
    return float(value)


def plan_samples(
    regime: str,
    n: int,
    delta: float,
    *,
    gamma: float | None = None,
    r: int | None = None,
    sigma_ub: float | None = None,
    alpha: float | None = None,
    w_min: float | None = None,
    max_parents: int = 0,
) -> SampleSizePlan:
    """Samples per interventional distribution and per query for ``regime``."""
    if regime not in REGIMES:
        raise ValidationError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    if n < 1:
        raise ValidationError("n must be >= 1")
    if not 0 < delta < 1:
        raise ValidationError("delta must lie in (0, 1)")
    if w_min is not None and w_min != math.inf:
        # infinite w_min means there are no edges to detect
        _positive("w_min", w_min)
    inputs = {"n": n, "delta": delta}
    ln_n = math.log(n)

    if regime in ("continuous", "continuous-imperfect", "transitive-continuous"):
        s = _positive("sigma_ub", sigma_ub)
        m = math.ceil(8.0 * s * (2.0 * ln_n + math.log(2.0 / delta)))
        inputs["sigma_ub"] = s
        return SampleSizePlan(regime, max(m, 1), max(m, 1), 1, inputs)

    g = _positive("gamma", gamma)
    if r is None or r < 2:
        raise ValidationError("r (largest domain size) must be >= 2")
    inputs.update(gamma=g, r=r)
    if regime == "discrete":
        tau = g / 2.0
        m = math.ceil(32.0 / tau**2 * (2.0 * ln_n + math.log(2.0 * r / delta)))
        dists = r
    elif regime == "discrete-imperfect":
        if alpha is None or not 0.5 <= alpha <= 1.0:
            raise ValidationError("alpha must lie in [1/2, 1]")
        t = g / 8.0
        L = r * n * n
        m = math.ceil(4.0 / (alpha * t * t) * math.log(4.0 * L / delta))
        dists = r
        inputs["alpha"] = alpha
    else:
        if max_parents < 0:
            raise ValidationError("max_parents must be >= 0")
        tau = g / 2.0
        dists = r ** (max_parents + 1)
        m = math.ceil(32.0 / tau**2 * (2.0 * ln_n + math.log(2.0 * dists / delta)))
        inputs["max_parents"] = max_parents
    m = max(m, 1)
    return SampleSizePlan(regime, m, dists * m, dists, inputs)


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float


def evaluate(truth: Dag, learned: Dag) -> Metrics:
    """Edge precision, recall and F1 over directed edges.

    An empty learned set has precision 1; an empty truth has recall 1.
    """
    if truth.n != learned.n:
        raise ValidationError(f"vertex counts differ: {truth.n} vs {learned.n}")
    hit = len(truth.edges & learned.edges)
    precision = hit / learned.num_edges() if learned.num_edges() else 1.0
    recall = hit / truth.num_edges() if truth.num_edges() else 1.0
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return Metrics(precision, recall, f1)


@dataclass
class RecoveryReport:
    """Outcome of a learning run, JSON-friendly through :meth:`to_dict`."""

    learned: Dag
    path_queries: int = 0
    transitive_queries: int = 0
    total_samples: int = 0
    metrics: Metrics | None = None
    notes: dict = field(default_factory=dict)

    def with_truth(self, truth: Dag) -> RecoveryReport:
        self.metrics = evaluate(truth, self.learned)
        self.notes["exact_match"] = truth == self.learned
        return self

    def to_dict(self) -> dict:
        out = {
            "n": self.learned.n,
            "learned_edges": [list(e) for e in self.learned.sorted_edges()],
            "path_queries": self.path_queries,
            "transitive_queries": self.transitive_queries,
            "total_samples": self.total_samples,
        }
        if self.metrics is not None:
            out["metrics"] = asdict(self.metrics)
        if self.notes:
            out["notes"] = self.notes
        return out


def _consume(out) -> tuple[bool, int]:
    used = getattr(out, "samples_used", 0)
    return bool(out), int(used)


def learn_tr(n: int, query: Callable[[int, int], object]) -> RecoveryReport:
    """Query every ordered pair once, keep the positive answers, reduce.

    ``query`` returns a bool or a :class:`~pathlearn.queries.QueryOutcome`.
    Raises :class:`CyclicAnswerError` when the answers contain a cycle.
    """
    edges, samples, issued = [], 0, 0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            answer, used = _consume(query(i, j))
            issued += 1
            samples += used
            if answer:
                edges.append((i, j))
    try:
        answers = Dag(n, edges)
    except CycleError:
        raise CyclicAnswerError(
            f"path query answers contain a directed cycle ({len(edges)} positive answers); "
            "more samples per query are needed",
            edges,
            RecoveryReport(Dag(n), path_queries=issued, total_samples=samples),
        ) from None
    return RecoveryReport(transitive_reduction(answers), path_queries=issued, total_samples=samples)


def learn_transitive_edges(
    tr: Dag, tquery: Callable[[int, int, Sequence[int]], object]
) -> RecoveryReport:
    """Add back transitive edges to a transitively reduced graph.

    For each node in topological order, earlier nodes are tried from the
    nearest to the farthest with the current parent estimate as the
    conditioning set; accepted nodes join that estimate. Nodes already in
    the estimate are not queried.
    """
    if transitive_reduction(tr) != tr:
        raise ValidationError("input graph must be transitively reduced")
    order = tr.topological_order()
    parents = {v: set(tr.parents(v)) for v in range(tr.n)}
    added, samples, issued = [], 0, 0
    for b in range(1, len(order)):
        j = order[b]
        for a in range(b - 1, -1, -1):
            i = order[a]
            if i in parents[j]:
                continue
            answer, used = _consume(tquery(i, j, sorted(parents[j])))
            issued += 1
            samples += used
            if answer:
                added.append((i, j))
                parents[j].add(i)
    learned = tr.with_edges(added)
    return RecoveryReport(learned, transitive_queries=issued, total_samples=samples)


def learn_structure(
    n: int,
    query: Callable[[int, int], object],
    tquery: Callable[[int, int, Sequence[int]], object] | None = None,
) -> RecoveryReport:
    """Both phases; the transitive phase is skipped when ``tquery`` is None."""
    first = learn_tr(n, query)
    if tquery is None:
        return first
    second = learn_transitive_edges(first.learned, tquery)
    return RecoveryReport(
        second.learned,
        path_queries=first.path_queries,
        transitive_queries=second.transitive_queries,
        total_samples=first.total_samples + second.total_samples,
        notes={"reduced_edges": first.learned.num_edges()},
    )
