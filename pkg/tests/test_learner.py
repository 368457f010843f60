import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_tr, random_edges
from pathlearn.errors import CyclicAnswerError, FaithfulnessError, ValidationError
from pathlearn.discrete_cbn import random_discrete_cbn
from pathlearn.graph import Dag, random_tr_dag, transitive_reduction
from pathlearn.learner import (
    evaluate,
    learn_structure,
    learn_tr,
    learn_transitive_edges,
    plan_samples,
)
from pathlearn.model_io import load_bundled
from pathlearn.queries import (
    CbnSampler,
    DiscretePathQuery,
    ExactDiscreteTransitiveOracle,
    PathOracle,
    QueryOutcome,
    TransitiveOracle,
)
from pathlearn.seeding import derive_seed


# frozen outputs of the planner formulas, evaluated by hand
@pytest.mark.parametrize(
    "regime,kw,m",
    [
        ("discrete", dict(n=15, delta=0.05, gamma=0.05, r=3), 522_424),
        ("continuous", dict(n=20, delta=0.01, sigma_ub=10.0), 904),
        ("continuous-imperfect", dict(n=20, delta=0.01, sigma_ub=10.0), 904),
        ("discrete-imperfect", dict(n=10, delta=0.05, gamma=0.1, r=3, alpha=0.9), 286_886),
        ("transitive-discrete", dict(n=10, delta=0.1, gamma=0.1, r=3, max_parents=2), 139_479),
    ],
)
def test_planner_frozen_values(regime, kw, m):
    kw = dict(kw)
    n, delta = kw.pop("n"), kw.pop("delta")
    plan = plan_samples(regime, n, delta, **kw)
    assert plan.m_per_distribution == m
    assert plan.m_per_query == m * plan.distributions_per_query


def test_planner_query_cost():
    plan = plan_samples("transitive-discrete", 10, 0.1, gamma=0.1, r=3, max_parents=2)
    assert plan.distributions_per_query == 27
    assert plan_samples("discrete", 10, 0.1, gamma=0.1, r=4).distributions_per_query == 4
    assert plan_samples("continuous", 10, 0.1, sigma_ub=1).distributions_per_query == 1


def test_planner_rejects_unfaithful_and_bad_inputs():
    with pytest.raises(FaithfulnessError):
        plan_samples("discrete", 10, 0.1, gamma=0.0, r=2)
    with pytest.raises(FaithfulnessError):
        plan_samples("continuous", 10, 0.1, sigma_ub=1.0, w_min=0.0)
    with pytest.raises(ValidationError):
        plan_samples("discrete", 10, 1.5, gamma=0.1, r=2)
    with pytest.raises(ValidationError):
        plan_samples("discrete", 10, 0.1, gamma=0.1)
    with pytest.raises(ValidationError):
        plan_samples("discrete-imperfect", 10, 0.1, gamma=0.1, r=2, alpha=0.3)
    with pytest.raises(ValidationError):
        plan_samples("nope", 10, 0.1)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 1.0), st.floats(1e-3, 1.0), st.integers(2, 200))
def test_planner_monotone(g1, g2, n):
    lo, hi = sorted((g1, g2))
    a = plan_samples("discrete", n, 0.05, gamma=lo, r=3).m_per_distribution
    b = plan_samples("discrete", n, 0.05, gamma=hi, r=3).m_per_distribution
    assert a >= b
    assert plan_samples("discrete", n + 1, 0.05, gamma=hi, r=3).m_per_distribution >= b


def test_metrics_edge_cases():
    g = Dag(3, [(0, 1), (1, 2)])
    assert evaluate(g, g).f1 == 1.0
    empty = evaluate(g, Dag(3))
    assert (empty.precision, empty.recall, empty.f1) == (1.0, 0.0, 0.0)
    assert evaluate(Dag(3), Dag(3)).f1 == 1.0
    half = evaluate(g, Dag(3, [(0, 1), (0, 2)]))
    assert (half.precision, half.recall) == (0.5, 0.5)
    with pytest.raises(ValidationError):
        evaluate(g, Dag(4))


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 9), st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_noiseless_learners_recover_graph(n, seed, p):
    edges = random_edges(n, p, np.random.default_rng(seed))
    g = Dag(n, edges)
    calls = []

    def q(i, j):
        calls.append((i, j))
        return PathOracle(g)(i, j)

    rep = learn_tr(n, q)
    assert rep.learned.edges == brute_tr(n, edges)
    assert len(calls) == n * (n - 1) == rep.path_queries
    full = learn_transitive_edges(rep.learned, TransitiveOracle(g))
    assert full.learned == g


def test_transitive_phase_skips_known_parents():
    g = Dag(3, [(0, 1), (1, 2), (0, 2)])
    seen = []

    def tq(i, j, S):
        seen.append((i, j, tuple(S)))
        return TransitiveOracle(g)(i, j, S)

    rep = learn_transitive_edges(transitive_reduction(g), tq)
    assert rep.learned == g
    # node 1 has parent 0 already; node 2 only asks about 0, conditioning on {1}
    assert seen == [(0, 2, (1,))]
    assert rep.transitive_queries == 1


def test_transitive_phase_requires_reduced_input():
    with pytest.raises(ValidationError):
        learn_transitive_edges(Dag(3, [(0, 1), (1, 2), (0, 2)]), lambda i, j, S: False)


def test_cyclic_answers_raise():
    with pytest.raises(CyclicAnswerError) as info:
        learn_tr(3, lambda i, j: True)
    assert len(info.value.edges) == 6


def test_sample_accounting_and_report():
    g = Dag(3, [(0, 1)])
    q = lambda i, j: QueryOutcome(PathOracle(g)(i, j), 10, 0.0)  # noqa: E731
    rep = learn_structure(3, q, lambda i, j, S: QueryOutcome(False, 7, 0.0))
    assert rep.total_samples == 60 + 7 * rep.transitive_queries
    d = rep.with_truth(g).to_dict()
    assert d["metrics"]["f1"] == 1.0 and d["learned_edges"] == [[0, 1]]
    assert learn_structure(3, q).transitive_queries == 0


def test_path_queries_cannot_see_the_shortcut_edge():
    g = Dag(3, [(0, 1), (1, 2), (0, 2)])
    assert learn_tr(3, PathOracle(g)).learned.edges == {(0, 1), (1, 2)}


def test_triangle_restored_by_exact_transitive_query():
    g = Dag(3, [(0, 1), (1, 2), (0, 2)])
    cbn = random_discrete_cbn(g, 3, 0.05, 7)
    tr = learn_tr(3, ExactDiscreteTransitiveOracle(cbn)).learned
    assert tr.edges == {(0, 1), (1, 2)}
    assert learn_transitive_edges(tr, ExactDiscreteTransitiveOracle(cbn)).learned == g


def test_reduction_only_scores_on_child():
    child = load_bundled("child").dag
    m = evaluate(child, transitive_reduction(child))
    assert (m.precision, m.recall) == (1.0, 0.96)


def test_planned_discrete_recovery_at_small_delta():
    # the bound promises 1 - delta; allow one miss in 40
    n, r, gamma, delta = 10, 3, 0.05, 0.01
    m = plan_samples("discrete", n, delta, gamma=gamma, r=r).m_per_distribution
    wins = 0
    for t in range(40):
        g = random_tr_dag(n, 0.2, derive_seed(21, t, 0))
        cbn = random_discrete_cbn(g, r, gamma, derive_seed(21, t, 1))
        q = DiscretePathQuery(CbnSampler(cbn), m, gamma, seed=derive_seed(21, t, 2))
        wins += learn_tr(n, q).learned == g
    assert wins >= 39
