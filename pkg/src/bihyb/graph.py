"""Graph types and the structural utilities shared by all three problems.

Every graph here is immutable: modifications return a new object, so search
states that share history never alias each other's edges.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import lcm
from typing import Any, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ContractError, CycleError, InvalidActionError, ValidationError

Number = int | Fraction


class WeightedDigraph:
    """Directed graph on nodes ``0..node_count-1`` with non-negative edge weights.

    ``edges`` may contain ``(u, v)`` pairs (weight 0) or ``(u, v, w)`` triples.
    """

    def __init__(self, node_count: int, edges: Iterable = (), node_attrs: Sequence[Mapping] | None = None):
        if node_count < 0:
            raise ContractError("node_count must be non-negative")
        weights: dict[tuple[int, int], Number] = {}
        for e in edges:
            u, v = int(e[0]), int(e[1])
            w = e[2] if len(e) > 2 else 0
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise ContractError(f"edge ({u}, {v}) out of range for {node_count} nodes")
            if u == v:
                raise ContractError(f"self-loop on node {u}")
            if w < 0:
                raise ContractError(f"negative weight on edge ({u}, {v})")
            if (u, v) in weights:
                raise ContractError(f"duplicate edge ({u}, {v})")
            weights[(u, v)] = w
        self.node_count = node_count
        self._weights = weights
        self.node_attrs = tuple(node_attrs) if node_attrs is not None else None

    @classmethod
    def _from_weights(cls, node_count, weights, node_attrs):
        g = cls.__new__(cls)
        g.node_count = node_count
        g._weights = weights
        g.node_attrs = node_attrs
        return g

    @property
    def edges(self) -> Mapping[tuple[int, int], Number]:
        return self._weights

    def __len__(self):
        return self.node_count

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._weights

    def weight(self, u: int, v: int) -> Number:
        return self._weights[(u, v)]

    @cached_property
    def _succ(self) -> tuple[tuple[int, ...], ...]:
        succ: list[list[int]] = [[] for _ in range(self.node_count)]
        for u, v in self._weights:
            succ[u].append(v)
        return tuple(tuple(sorted(s)) for s in succ)

    @cached_property
    def _pred(self) -> tuple[tuple[int, ...], ...]:
        pred: list[list[int]] = [[] for _ in range(self.node_count)]
        for u, v in self._weights:
            pred[v].append(u)
        return tuple(tuple(sorted(p)) for p in pred)

    def successors(self, u: int) -> tuple[int, ...]:
        return self._succ[u]

    def predecessors(self, v: int) -> tuple[int, ...]:
        return self._pred[v]

    def with_edge(self, u: int, v: int, w: Number = 0) -> "WeightedDigraph":
        """Return a copy with edge ``u -> v`` added."""
        if u == v:
            raise InvalidActionError(f"self-loop on node {u}")
        if (u, v) in self._weights:
            raise InvalidActionError(f"edge ({u}, {v}) already present")
        if not (0 <= u < self.node_count and 0 <= v < self.node_count):
            raise InvalidActionError(f"edge ({u}, {v}) out of range")
        weights = dict(self._weights)
        weights[(u, v)] = w
        return WeightedDigraph._from_weights(self.node_count, weights, self.node_attrs)

    def without_edge(self, u: int, v: int) -> "WeightedDigraph":
        weights = dict(self._weights)
        del weights[(u, v)]
        return WeightedDigraph._from_weights(self.node_count, weights, self.node_attrs)

    def __eq__(self, other):
        if not isinstance(other, WeightedDigraph):
            return NotImplemented
        return self.node_count == other.node_count and self._weights == other._weights

    def __hash__(self):
        return hash((self.node_count, frozenset(self._weights.items())))

    def __repr__(self):
        return f"WeightedDigraph(node_count={self.node_count}, edges={sorted(self._weights)})"


def is_acyclic(g: WeightedDigraph) -> bool:
    try:
        topological_order(g)
    except CycleError:
        return False
    return True


def would_create_cycle(g: WeightedDigraph, u: int, v: int) -> bool:
    """True iff adding ``u -> v`` to the acyclic graph ``g`` closes a cycle."""
    if u == v:
        raise InvalidActionError(f"self-loop on node {u}")
    seen = {v}
    stack = [v]
    while stack:
        x = stack.pop()
        if x == u:
            return True
        for y in g.successors(x):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return False


def topological_order(g: WeightedDigraph) -> list[int]:
    """Kahn's algorithm; among available nodes the smallest id goes first.

    Raises:
        CycleError: if ``g`` has a directed cycle. ``err.edge`` lies on it.
    """
    indeg = [len(g.predecessors(v)) for v in range(g.node_count)]
    heap = [v for v in range(g.node_count) if indeg[v] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = heapq.heappop(heap)
        order.append(u)
        for v in g.successors(u):
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(heap, v)
    if len(order) < g.node_count:
        raise CycleError(_find_cycle_edge(g, indeg))
    return order


def _find_cycle_edge(g, indeg):
    # Every leftover node has a leftover predecessor; walking backwards must repeat.
    x = next(v for v in range(g.node_count) if indeg[v] > 0)
    visited = {}
    step = 0
    while x not in visited:
        visited[x] = step
        step += 1
        x_prev = next(p for p in g.predecessors(x) if indeg[p] > 0)
        if x_prev in visited:
            return (x_prev, x)
        x = x_prev
    raise AssertionError("unreachable")


def reverse(g: WeightedDigraph) -> WeightedDigraph:
    weights = {(v, u): w for (u, v), w in g.edges.items()}
    return WeightedDigraph._from_weights(g.node_count, weights, g.node_attrs)


def ancestor_masks(g: WeightedDigraph, order: Sequence[int] | None = None) -> list[int]:
    """Bitmask of strict ancestors for every node (bit ``j`` set iff ``j`` reaches ``i``)."""
    if order is None:
        order = topological_order(g)
    anc = [0] * g.node_count
    for v in order:
        m = 0
        for p in g.predecessors(v):
            m |= anc[p] | (1 << p)
        anc[v] = m
    return anc


class LabeledGraph:
    """Simple undirected graph with one categorical label per node."""

    def __init__(self, labels: Sequence[Hashable], edges: Iterable[tuple[int, int]] = ()):
        self.labels = tuple(labels)
        n = len(self.labels)
        es = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ContractError(f"self-loop on node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ContractError(f"edge ({u}, {v}) out of range for {n} nodes")
            e = (u, v) if u < v else (v, u)
            if e in es:
                raise ContractError(f"duplicate edge {e}")
            es.add(e)
        self.edges = frozenset(es)

    @property
    def node_count(self) -> int:
        return len(self.labels)

    def has_edge(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self.edges

    def toggle_edge(self, u: int, v: int) -> "LabeledGraph":
        """Delete ``{u, v}`` if present, otherwise add it."""
        if u == v:
            raise InvalidActionError(f"self-loop on node {u}")
        if not (0 <= u < self.node_count and 0 <= v < self.node_count):
            raise InvalidActionError(f"edge ({u}, {v}) out of range")
        e = (u, v) if u < v else (v, u)
        g = LabeledGraph.__new__(LabeledGraph)
        g.labels = self.labels
        g.edges = self.edges - {e} if e in self.edges else self.edges | {e}
        return g

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.node_count, self.node_count), dtype=np.int64)
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1
        a.setflags(write=False)
        return a

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        d = [0] * self.node_count
        for u, v in self.edges:
            d[u] += 1
            d[v] += 1
        return tuple(d)

    def __eq__(self, other):
        if not isinstance(other, LabeledGraph):
            return NotImplemented
        return self.labels == other.labels and self.edges == other.edges

    def __hash__(self):
        return hash((self.labels, self.edges))

    def __repr__(self):
        return f"LabeledGraph(labels={list(self.labels)}, edges={sorted(self.edges)})"


@dataclass(frozen=True, eq=True)
class DagInstance:
    """Jobs with precedence edges, durations (seconds), and resource demand.

    Durations are exact rationals; the simulator works on ``ticks``, the
    durations scaled by a common denominator ``tick_scale``.
    """

    graph: WeightedDigraph
    duration: tuple[Fraction, ...]
    resource: tuple[int, ...]
    capacity: int
    job: tuple[int, ...] | None = None
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        n = self.graph.node_count
        object.__setattr__(self, "duration", tuple(Fraction(d) for d in self.duration))
        object.__setattr__(self, "resource", tuple(int(r) for r in self.resource))
        if len(self.duration) != n or len(self.resource) != n:
            raise ValidationError("duration/resource length must equal node count")
        if any(d <= 0 for d in self.duration):
            raise ValidationError("durations must be positive")
        if any(r < 1 for r in self.resource):
            raise ValidationError("resources must be >= 1")
        if any(r > self.capacity for r in self.resource):
            raise ValidationError(f"a job needs more than the capacity {self.capacity}")
        if self.job is not None and len(self.job) != n:
            raise ValidationError("job length must equal node count")
        if self.names is not None and len(self.names) != n:
            raise ValidationError("names length must equal node count")
        try:
            topological_order(self.graph)
        except CycleError as err:
            raise ValidationError(f"precedence graph is cyclic (edge {err.edge})") from err

    @property
    def node_count(self) -> int:
        return self.graph.node_count

    @cached_property
    def tick_scale(self) -> int:
        return lcm(1, *(d.denominator for d in self.duration))

    @cached_property
    def ticks(self) -> tuple[int, ...]:
        s = self.tick_scale
        return tuple(int(d * s) for d in self.duration)


@dataclass(frozen=True, eq=True)
class HcpInstance:
    """Undirected graph for the Hamiltonian cycle problem."""

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        es = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValidationError(f"self-loop on node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValidationError(f"edge ({u}, {v}) out of range for {self.n} nodes")
            es.add((u, v) if u < v else (v, u))
        object.__setattr__(self, "edges", frozenset(es))


Instance = DagInstance | tuple[LabeledGraph, LabeledGraph] | HcpInstance


def instance_kind(inst: Any) -> str:
    if isinstance(inst, DagInstance):
        return "dag"
    if isinstance(inst, HcpInstance):
        return "hcp"
    if isinstance(inst, tuple) and len(inst) == 2 and all(isinstance(g, LabeledGraph) for g in inst):
        return "ged"
    raise ContractError(f"not an instance: {type(inst).__name__}")
