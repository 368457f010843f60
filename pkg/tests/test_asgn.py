import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_edges
from pathlearn.asgn import (
    AsgnNetwork,
    analytic_moments,
    compute_wmin_wmax,
    compute_wmin_wmax_transitive,
    random_asgn,
    sample,
    total_effects,
)
from pathlearn.errors import ValidationError
from pathlearn.graph import Dag, random_tr_dag
from pathlearn.interventions import InterventionSpec


def path_sum(W, edges, i, j, cut=()):
    """Sum over directed i->j paths of the product of edge weights, avoiding edges into ``cut``."""
    succ = {}
    for a, b in edges:
        if b not in cut:
            succ.setdefault(a, []).append(b)
    total = 0.0
    stack = [(i, 1.0)]
    while stack:
        v, w = stack.pop()
        if v == j:
            total += w
            continue
        for c in succ.get(v, []):
            stack.append((c, w * W[c, v]))
    return total


def rand_net(seed, n=6, p=0.5):
    gen = np.random.default_rng(seed)
    edges = random_edges(n, p, gen)
    W = np.zeros((n, n))
    for a, b in edges:
        W[b, a] = gen.uniform(0.1, 1.2) * gen.choice([-1, 1])
    return AsgnNetwork(Dag(n, edges), W, gen.uniform(1, 5, n))


def triangle():
    # X0 -> X1 -> X2 and X0 -> X2 with the direct effect cancelling the indirect one
    W = np.zeros((3, 3))
    W[1, 0], W[2, 1], W[2, 0] = 1.0, 1.0, -1.0
    return AsgnNetwork(Dag(3, [(0, 1), (1, 2), (0, 2)]), W, [1.0, 1.0, 1.0])


def test_support_must_match_graph():
    with pytest.raises(ValidationError):
        AsgnNetwork(Dag(2, [(0, 1)]), np.zeros((2, 2)), [1, 1])
    with pytest.raises(ValidationError):
        AsgnNetwork(Dag(2), [[0, 0], [1, 0]], [1, 1])
    with pytest.raises(ValidationError):
        AsgnNetwork(Dag(2), np.zeros((2, 2)), [1, 0])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_total_effects_are_path_sums(seed):
    net = rand_net(seed)
    edges = net.dag.edges
    B = total_effects(net, [2])
    for i in range(net.n):
        for j in range(net.n):
            if i != j:
                assert B[j, i] == pytest.approx(path_sum(net.W, edges, i, j, cut={2}), abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_wmin_is_smallest_edge_total_effect(seed):
    net = rand_net(seed)
    want = min(
        (abs(path_sum(net.W, net.dag.edges, i, j, cut={i})) for i, j in net.dag.edges),
        default=math.inf,
    )
    assert compute_wmin_wmax(net).w_min == pytest.approx(want, abs=1e-12)


def test_triangle_is_flagged_unfaithful_with_zero_mean():
    net = triangle()
    consts = compute_wmin_wmax(net)
    assert not consts.faithful and consts.z is None
    assert consts.w_min == pytest.approx(0.0, abs=1e-15)
    for z in (-5.0, 1.0, 7.0):
        mean, _ = analytic_moments(net, 2, InterventionSpec.do({0: z}))
        assert mean == 0.0
    # every weight is nonzero, so the transitive constants stay faithful
    assert compute_wmin_wmax_transitive(net).faithful


def test_moments_hand_computed():
    # [DERIVED] chain X0 -> X1 with weight 2, do(X0 = 3): mean 6, variance sigma_1^2 = 4
    net = AsgnNetwork(Dag(2, [(0, 1)]), [[0, 0], [2.0, 0]], [1.0, 4.0])
    assert analytic_moments(net, 1, InterventionSpec.do({0: 3.0})) == (6.0, 4.0)
    spec = InterventionSpec.do({0: 3.0}).with_spread({0: 0.5})
    assert analytic_moments(net, 1, spec) == (6.0, 6.0)


@pytest.mark.parametrize("kind", ["gaussian", "uniform"])
def test_forward_sampling_matches_moments(kind):
    net = rand_net(5, n=5, p=0.6)
    net = AsgnNetwork(net.dag, net.W, net.noise_variances, kind)
    spec = InterventionSpec.do({1: 2.5})
    m = 200_000
    x = sample(net, spec, m, seed=3)
    for j in range(net.n):
        mean, var = analytic_moments(net, j, spec)
        assert x[:, j].mean() == pytest.approx(mean, abs=6 * math.sqrt(var / m) + 1e-12)
        if var > 0:
            assert x[:, j].var() == pytest.approx(var, rel=0.03)


def test_wmax_covers_mutilations():
    net = rand_net(9)
    consts = compute_wmin_wmax(net)
    for i in range(net.n):
        B = total_effects(net, [i])
        assert (B**2).sum(axis=1).max() <= consts.w_max + 1e-12
    assert consts.sigma_ub == pytest.approx(net.noise_variances.max() * consts.w_max)


def test_transitive_constants():
    for seed in range(10):
        net = rand_net(seed)
        t = compute_wmin_wmax_transitive(net)
        for j in range(net.n):
            pa = net.dag.parents(j)
            if pa:
                B = total_effects(net, pa)
                assert (B**2).sum(axis=1).max() <= t.w_max + 1e-12
        assert t.w_min == pytest.approx(np.abs(net.W[net.W != 0]).min(initial=math.inf))


def test_random_asgn_respects_ranges():
    g = random_tr_dag(20, 0.1, seed=1)
    net = random_asgn(g, seed=2)
    w = np.abs(net.W[net.W != 0])
    assert np.all((w >= 0.01) & (w <= 1.25))
    assert np.all((net.noise_variances >= 1) & (net.noise_variances <= 5))
    assert (total_effects(net) ** 2).sum(axis=1).max() <= 20
    assert compute_wmin_wmax(net).faithful
    assert net == random_asgn(g, seed=2)


def test_empty_graph_constants():
    consts = compute_wmin_wmax(AsgnNetwork(Dag(3), np.zeros((3, 3)), [1, 2, 3]))
    assert consts.w_min == math.inf
    assert consts.z == 0.0 and consts.faithful
