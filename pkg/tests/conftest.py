"""Shared independent oracles. Nothing here calls into pathlearn's graph code."""
import itertools
from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"


def random_edges(n, p, gen):
    """Edges of a random DAG: upper-triangular Bernoulli(p) under a random relabelling."""
    perm = gen.permutation(n)
    return sorted(
        (int(perm[a]), int(perm[b]))
        for a in range(n)
        for b in range(a + 1, n)
        if gen.random() < p
    )


def reach_dfs(n, edges):
    """reach[i][j] is True iff there is a directed path of length >= 1 from i to j."""
    succ = {v: [] for v in range(n)}
    for a, b in edges:
        succ[a].append(b)
    reach = [[False] * n for _ in range(n)]
    for s in range(n):
        stack = list(succ[s])
        while stack:
            v = stack.pop()
            if not reach[s][v]:
                reach[s][v] = True
                stack.extend(succ[v])
    return reach


def brute_tr(n, edges):
    """Drop edge (i, j) iff j is reachable from i without using that edge."""
    keep = []
    es = set(edges)
    for e in sorted(es):
        rest = es - {e}
        if not reach_dfs(n, rest)[e[0]][e[1]]:
            keep.append(e)
    return set(keep)


def brute_transitive_edges(n, edges):
    return set(edges) - brute_tr(n, edges)


def all_subsets(items):
    items = list(items)
    for k in range(len(items) + 1):
        yield from itertools.combinations(items, k)


def brute_marginal(cbn, j, do=None, phi=None):
    """p(X_j | do) by summing the product of CPT entries over every full assignment."""
    do = do or {}
    phi = phi or {}
    sizes = cbn.domain_sizes
    out = np.zeros(sizes[j])
    for x in itertools.product(*(range(d) for d in sizes)):
        p = 1.0
        for v in range(cbn.n):
            if v in do:
                f = phi.get(v, 1.0)
                p *= f if x[v] == do[v] else (1 - f) / (sizes[v] - 1)
                continue
            row, stride = 0, 1
            for q in sorted(cbn.parents(v)):
                row += x[q] * stride
                stride *= sizes[q]
            p *= cbn.cpts[v][row, x[v]]
        out[x[j]] += p
    return out


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def gen():
    return np.random.default_rng(12345)


# acceptance results, printed once at the end of the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (bool(ok), detail)
    print(f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
