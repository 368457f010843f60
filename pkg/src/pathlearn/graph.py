"""DAG representation, reachability and transitive reduction.

Vertices are the dense integers ``0..n-1``. Reachability is computed with
Python integers used as bitsets, one row per vertex, filled in reverse
topological order, which costs O(n * |E| / word) and stays fast well past
the network sizes used here.
"""
from __future__ import annotations

import heapq
from collections.abc import Iterable

import numpy as np

from .errors import CycleError, ValidationError


class Dag:
    """Immutable directed acyclic graph over vertices ``0..n-1``.

    Construction validates the vertex range, rejects self-loops and
    duplicate edges, and fails with :class:`CycleError` on a cycle.
    """

    __slots__ = ("_n", "_edges", "_children", "_parents", "_order")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        n = int(n)
        if n < 0:
            raise ValidationError(f"vertex count must be non-negative, got {n}")
        edge_list = [(int(a), int(b)) for a, b in edges]
        edge_set = frozenset(edge_list)
        if len(edge_set) != len(edge_list):
            raise ValidationError("duplicate edges")
        children: list[list[int]] = [[] for _ in range(n)]
        parents: list[list[int]] = [[] for _ in range(n)]
        for a, b in edge_set:
            if not (0 <= a < n and 0 <= b < n):
                raise ValidationError(f"edge ({a}, {b}) out of range for n={n}")
            if a == b:
                raise ValidationError(f"self-loop on vertex {a}")
            children[a].append(b)
            parents[b].append(a)
        self._n = n
        self._edges = edge_set
        self._children = tuple(tuple(sorted(c)) for c in children)
        self._parents = tuple(tuple(sorted(p)) for p in parents)
        self._order = _kahn(n, self._children, self._parents)

    @classmethod
    def from_adjacency(cls, adj) -> Dag:
        adj = np.asarray(adj, dtype=bool)
        rows, cols = np.nonzero(adj)
        return cls(adj.shape[0], zip(rows.tolist(), cols.tolist()))

    @property
    def n(self) -> int:
        return self._n

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return self._edges

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self._edges)

    def num_edges(self) -> int:
        return len(self._edges)

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self._edges

    def children(self, i: int) -> tuple[int, ...]:
        return self._children[i]

    def parents(self, i: int) -> tuple[int, ...]:
        return self._parents[i]

    def topological_order(self) -> tuple[int, ...]:
        return self._order

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self._n, self._n), dtype=bool)
        for a, b in self._edges:
            adj[a, b] = True
        return adj

    def ancestors(self, nodes: Iterable[int]) -> set[int]:
        """Strict and non-strict ancestors: the given nodes plus everything reaching them."""
        seen: set[int] = set()
        stack = list(nodes)
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(self._parents[v])
        return seen

    def without_incoming(self, targets: Iterable[int]) -> Dag:
        """The mutilated graph: every edge into ``targets`` removed."""
        targets = set(targets)
        if not targets:
            return self
        return Dag(self._n, (e for e in self._edges if e[1] not in targets))

    def with_edges(self, extra: Iterable[tuple[int, int]]) -> Dag:
        return Dag(self._n, self._edges | set(extra))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return self._n == other._n and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((self._n, self._edges))

    def __repr__(self) -> str:
        return f"Dag(n={self._n}, edges={self.sorted_edges()})"


def _kahn(n, children, parents) -> tuple[int, ...]:
    indeg = [len(p) for p in parents]
    heap = [v for v in range(n) if indeg[v] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, c)
    if len(order) != n:
        raise CycleError("graph contains a directed cycle")
    return tuple(order)


def topological_order(g: Dag) -> list[int]:
    """Kahn's order with ties broken by ascending vertex id."""
    return list(g.topological_order())


def _reach_bits(g: Dag) -> list[int]:
    # bit j of reach[i] is set iff a path of length >= 1 leads from i to j
    reach = [0] * g.n
    for v in reversed(g.topological_order()):
        acc = 0
        for c in g.children(v):
            acc |= (1 << c) | reach[c]
        reach[v] = acc
    return reach


def _bits_to_matrix(rows: list[int], n: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=bool)
    for i, bits in enumerate(rows):
        while bits:
            low = bits & -bits
            out[i, low.bit_length() - 1] = True
            bits ^= low
    return out


def transitive_closure(g: Dag) -> np.ndarray:
    """Boolean reachability matrix; entry (i, j) is True iff a directed i->j path exists.

    The diagonal is always False. The returned array is read-only.
    """
    mat = _bits_to_matrix(_reach_bits(g), g.n)
    mat.flags.writeable = False
    return mat


def transitive_reduction(g: Dag) -> Dag:
    """Remove every edge (i, j) for which a longer i->j path exists."""
    reach = _reach_bits(g)
    keep = []
    for i in range(g.n):
        via_children = 0
        for c in g.children(i):
            via_children |= reach[c]
        keep.extend((i, j) for j in g.children(i) if not (via_children >> j) & 1)
    return Dag(g.n, keep)


def count_transitive_edges(g: Dag) -> int:
    return g.num_edges() - transitive_reduction(g).num_edges()


def exact_path_query(reach: np.ndarray, i: int, j: int) -> bool:
    """Noiseless path query read off a reachability matrix."""
    if i == j:
        raise ValidationError("path query is undefined for i == j")
    return bool(reach[i, j])


def random_tr_dag(n: int, edge_density: float, seed: int) -> Dag:
    """Random transitively reduced DAG.

    Vertices are placed in a random order, each forward pair gets an edge
    with probability ``edge_density``, and the result is transitively
    reduced.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if not 0.0 <= edge_density <= 1.0:
        raise ValidationError("edge_density must lie in [0, 1]")
    gen = np.random.default_rng(seed)
    perm = gen.permutation(n)
    coins = gen.random((n, n)) < edge_density
    a, b = np.nonzero(np.triu(coins, k=1))
    edges = zip(perm[a].tolist(), perm[b].tolist())
    return transitive_reduction(Dag(n, edges))
