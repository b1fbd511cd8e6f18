r"""Graph edit distance: cost model, LSAP, and learning-free GED solvers.

Deletions and insertions are made ordinary assignments by padding to a square
problem of size ``N = n1 + n2``. Rows are the ``n1`` nodes of ``g1`` followed by
``n2`` insertion slots; columns are the ``n2`` nodes of ``g2`` followed by ``n1``
deletion slots::

    [ substitution (n1 x n2) | deletion, diagonal only (n1 x n1) ]
    [ insertion, diagonal only (n2 x n2) | free (n2 x n1)        ]

For a permutation ``X`` of this padded problem the edit cost is

.. math::

    f(X) = \langle C, X \rangle + c_e(|E_1| + |E_2|) - c_e \langle A_1 X A_2, X \rangle

where ``A1``/``A2`` are the adjacency matrices padded with isolated slots.
IPFP minimizes this over the doubly-stochastic relaxation by Frank-Wolfe
steps whose linear subproblems are LSAPs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numba
import numpy as np

from .errors import ContractError
from .graph import LabeledGraph

BRUTE_FORCE_MAX_NODES = 16


@dataclass(frozen=True)
class CostModel:
    """Uniform edit costs: substitution of differing labels, node and edge insertion/deletion."""

    sub: int | float = 1
    node_indel: int | float = 1
    edge_indel: int | float = 1

    def __post_init__(self):
        if min(self.sub, self.node_indel, self.edge_indel) < 0:
            raise ContractError("edit costs must be non-negative")

    def node_sub(self, l1: Hashable, l2: Hashable):
        return 0 if l1 == l2 else self.sub


UNIFORM = CostModel()


@dataclass(frozen=True)
class NodeMapping:
    """``assign[i]`` is the ``g2`` node that ``g1`` node ``i`` maps to, or ``None`` for deletion."""

    assign: tuple[int | None, ...]
    n2: int

    def __post_init__(self):
        targets = [j for j in self.assign if j is not None]
        if len(set(targets)) != len(targets):
            raise ContractError("node mapping is not injective")
        if any(not 0 <= j < self.n2 for j in targets):
            raise ContractError("node mapping target out of range")

    @property
    def inserted(self) -> tuple[int, ...]:
        covered = {j for j in self.assign if j is not None}
        return tuple(j for j in range(self.n2) if j not in covered)

    @property
    def deleted(self) -> tuple[int, ...]:
        return tuple(i for i, j in enumerate(self.assign) if j is None)

    @classmethod
    def from_padded(cls, sigma: Sequence[int], n1: int, n2: int) -> "NodeMapping":
        return cls(tuple(int(sigma[i]) if sigma[i] < n2 else None for i in range(n1)), n2)


@dataclass(frozen=True)
class GedResult:
    mapping: NodeMapping
    cost: int | float
    objective_trace: tuple[float, ...] = field(default=(), compare=False)


def edit_cost(g1: LabeledGraph, g2: LabeledGraph, m: NodeMapping, c: CostModel = UNIFORM):
    if len(m.assign) != g1.node_count or m.n2 != g2.node_count:
        raise ContractError("mapping does not fit the graph sizes")
    cost = 0
    for i, j in enumerate(m.assign):
        if j is None:
            cost += c.node_indel
        else:
            cost += c.node_sub(g1.labels[i], g2.labels[j])
    cost += c.node_indel * len(m.inserted)
    preimaged = 0
    for u, v in g1.edges:
        a, b = m.assign[u], m.assign[v]
        if a is not None and b is not None and g2.has_edge(a, b):
            preimaged += 1
        else:
            cost += c.edge_indel
    cost += c.edge_indel * (len(g2.edges) - preimaged)
    return cost


@numba.njit(cache=True)
def _hungarian(a):
    # Shortest augmenting path with potentials (1-indexed helper arrays, column 0 is a sentinel).
    n = a.shape[0]
    inf = np.inf
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, inf)
        used = np.zeros(n + 1, dtype=np.bool_)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = a[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    sigma = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        sigma[p[j] - 1] = j - 1
    return sigma


def hungarian_lsap(costs) -> tuple[np.ndarray, int | float]:
    """Exact minimum-cost perfect assignment.

    Returns:
        ``(sigma, total)`` with row ``i`` assigned to column ``sigma[i]``.
    """
    a = np.asarray(costs)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError(f"cost matrix must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ContractError("cost matrix entries must be finite")
    if a.shape[0] == 0:
        return np.zeros(0, dtype=np.int64), 0
    sigma = _hungarian(a.astype(np.float64))
    total = a[np.arange(a.shape[0]), sigma].sum()
    return sigma, total.item()


def _forbidden_mask(n1: int, n2: int) -> np.ndarray:
    n = n1 + n2
    mask = np.zeros((n, n), dtype=bool)
    mask[:n1, n2:] = True
    mask[n1:, :n2] = True
    mask[np.arange(n1), n2 + np.arange(n1)] = False
    mask[n1 + np.arange(n2), np.arange(n2)] = False
    return mask


def _node_costs(g1, g2, c) -> np.ndarray:
    n1, n2 = g1.node_count, g2.node_count
    cost = np.zeros((n1 + n2, n1 + n2))
    for i in range(n1):
        for j in range(n2):
            cost[i, j] = c.node_sub(g1.labels[i], g2.labels[j])
    cost[np.arange(n1), n2 + np.arange(n1)] = c.node_indel
    cost[n1 + np.arange(n2), np.arange(n2)] = c.node_indel
    return cost


def _big(n1, n2, c):
    # larger than any feasible total so forbidden cells never win an LSAP
    return 1.0 + (n1 + n2) * (max(c.sub, c.node_indel) + (n1 + n2) * c.edge_indel) * 4


def bipartite_cost_matrix(g1: LabeledGraph, g2: LabeledGraph, c: CostModel = UNIFORM) -> np.ndarray:
    """Padded assignment costs with a local edge term per node (degree difference)."""
    n1, n2 = g1.node_count, g2.node_count
    d1 = np.asarray(g1.degrees, dtype=float)
    d2 = np.asarray(g2.degrees, dtype=float)
    cost = _node_costs(g1, g2, c)
    cost[:n1, :n2] += c.edge_indel * np.abs(d1[:, None] - d2[None, :])
    cost[np.arange(n1), n2 + np.arange(n1)] += c.edge_indel * d1
    cost[n1 + np.arange(n2), np.arange(n2)] += c.edge_indel * d2
    cost[_forbidden_mask(n1, n2)] = _big(n1, n2, c)
    return cost


def hungarian_ged(g1: LabeledGraph, g2: LabeledGraph, c: CostModel = UNIFORM) -> GedResult:
    n1, n2 = g1.node_count, g2.node_count
    if n1 + n2 == 0:
        return GedResult(NodeMapping((), 0), 0)
    sigma, _ = hungarian_lsap(bipartite_cost_matrix(g1, g2, c))
    mapping = NodeMapping.from_padded(sigma, n1, n2)
    return GedResult(mapping, edit_cost(g1, g2, mapping, c))


def _padded_adjacency(g: LabeledGraph, n: int) -> np.ndarray:
    a = np.zeros((n, n))
    k = g.node_count
    a[:k, :k] = g.adjacency
    return a


def pad_partial_matching(x: np.ndarray) -> np.ndarray:
    """Extend an ``n1 x n2`` partial matching (row/col sums <= 1) to a doubly-stochastic padded matrix."""
    x = np.asarray(x, dtype=float)
    n1, n2 = x.shape
    row = x.sum(axis=1)
    col = x.sum(axis=0)
    if np.any(x < 0) or np.any(row > 1 + 1e-9) or np.any(col > 1 + 1e-9):
        raise ContractError("initial matching needs non-negative entries and row/col sums <= 1")
    out = np.zeros((n1 + n2, n1 + n2))
    out[:n1, :n2] = x
    out[np.arange(n1), n2 + np.arange(n1)] = 1 - row
    out[n1 + np.arange(n2), np.arange(n2)] = 1 - col
    out[n1:, n2:] = x.T
    return out


def ipfp_ged(g1: LabeledGraph, g2: LabeledGraph, c: CostModel = UNIFORM, init=None,
             max_iters: int = 50, tol: float = 1e-9) -> GedResult:
    """Frank-Wolfe (IPFP) on the relaxed padded edit-cost objective.

    ``init`` is an ``n1 x n2`` partial matching; by default every entry is
    ``1 / max(n1, n2)``. The result's ``objective_trace`` records the relaxed
    objective after every iteration, starting with the initial point.
    """
    if max_iters < 1 or tol <= 0:
        raise ContractError("need max_iters >= 1 and tol > 0")
    n1, n2 = g1.node_count, g2.node_count
    n = n1 + n2
    if n == 0:
        return GedResult(NodeMapping((), 0), 0, (0.0,))
    if init is None:
        init = np.full((n1, n2), 1.0 / max(n1, n2)) if n1 and n2 else np.zeros((n1, n2))
    x = pad_partial_matching(init)
    forbidden = _forbidden_mask(n1, n2)
    big = _big(n1, n2, c)
    node = _node_costs(g1, g2, c)
    node[forbidden] = 0.0
    a1 = _padded_adjacency(g1, n)
    a2 = _padded_adjacency(g2, n)
    ce = float(c.edge_indel)
    const = ce * (len(g1.edges) + len(g2.edges))

    def objective(x):
        return float((node * x).sum() + const - ce * ((a1 @ x @ a2) * x).sum())

    f = objective(x)
    trace = [f]
    for _ in range(max_iters):
        grad = node - 2.0 * ce * (a1 @ x @ a2)
        sigma, _ = hungarian_lsap(np.where(forbidden, big, grad))
        y = np.zeros_like(x)
        y[np.arange(n), sigma] = 1.0
        d = y - x
        b = float((grad * d).sum())
        if b >= -tol:
            break
        a = -ce * float(((a1 @ d @ a2) * d).sum())
        t = min(1.0, -b / (2.0 * a)) if a > 0 else 1.0
        x = x + t * d
        f_new = objective(x)
        trace.append(f_new)
        improvement = f - f_new
        f = f_new
        if improvement < tol:
            break
    sigma, _ = hungarian_lsap(np.where(forbidden, big, -x))
    mapping = NodeMapping.from_padded(sigma, n1, n2)
    return GedResult(mapping, edit_cost(g1, g2, mapping, c), tuple(trace))


def brute_force_ged(g1: LabeledGraph, g2: LabeledGraph, c: CostModel = UNIFORM) -> GedResult:
    """Exact GED by depth-first branch and bound over all partial injective mappings."""
    n1, n2 = g1.node_count, g2.node_count
    if n1 + n2 > BRUTE_FORCE_MAX_NODES:
        raise ContractError(f"brute force limited to n1 + n2 <= {BRUTE_FORCE_MAX_NODES}, got {n1 + n2}")
    adj1 = [[g1.has_edge(i, k) for k in range(n1)] for i in range(n1)]
    adj2 = [[g2.has_edge(j, l) for l in range(n2)] for j in range(n2)]
    e2 = len(g2.edges)
    best_cost = float("inf")
    best_assign: list | None = None
    assign: list[int | None] = []
    used = [False] * n2

    def leaf_cost(partial, matched_g2_edges):
        inserted = n2 - sum(used)
        return partial + c.node_indel * inserted + c.edge_indel * (e2 - matched_g2_edges)

    def dfs(i, partial, matched):
        nonlocal best_cost, best_assign
        if i == n1:
            total = leaf_cost(partial, matched)
            if total < best_cost:
                best_cost, best_assign = total, list(assign)
            return
        # g2 nodes that cannot be covered by the remaining g1 nodes must be inserted
        free = n2 - sum(used)
        bound = partial + c.node_indel * max(0, free - (n1 - i))
        if bound >= best_cost:
            return
        for j in [*range(n2), None]:
            if j is not None and used[j]:
                continue
            step = c.node_indel if j is None else c.node_sub(g1.labels[i], g2.labels[j])
            gained = 0
            for k in range(i):
                jk = assign[k]
                e1 = adj1[i][k]
                e2_present = j is not None and jk is not None and adj2[j][jk]
                if e1 and e2_present:
                    gained += 1
                elif e1:
                    step += c.edge_indel
            if partial + step >= best_cost:
                continue
            assign.append(j)
            if j is not None:
                used[j] = True
            dfs(i + 1, partial + step, matched + gained)
            if j is not None:
                used[j] = False
            assign.pop()

    dfs(0, 0, 0)
    mapping = NodeMapping(tuple(best_assign), n2)
    return GedResult(mapping, edit_cost(g1, g2, mapping, c))


GED_SOLVERS = {"hungarian": hungarian_ged, "ipfp": ipfp_ged}
