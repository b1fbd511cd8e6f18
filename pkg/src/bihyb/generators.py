"""Synthetic instance generators with realistic size and attribute statistics.

* DAG jobs: constituent DAGs of 2..18 nodes (mean ~9.18) and depth <= 4,
  durations in [16.3, 4964.5] s (mean ~1127), resource demand in [1, 593]
  (mean ~126), 6000 total resources.
* GED pairs: sparse molecule-like labelled graphs and perturbed, relabelled
  copies.
* HCP: a hidden Hamiltonian cycle plus random noise edges.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .errors import ContractError
from .graph import DagInstance, HcpInstance, LabeledGraph, WeightedDigraph

DAG_MIN_NODES, DAG_MAX_NODES = 2, 18
# 1 + Geometric(p) clamped at 18 has mean 9.18 for this p
DAG_SIZE_P = 0.10298
DUR_MIN, DUR_MAX = 16.3, 4964.5
RES_MIN, RES_MAX = 1, 593
CAPACITY = 6000
# exponential scales that, truncated to the ranges above, give means 1127.2 s and 125.8 units
DUR_SCALE = 1189.31
RES_SCALE = 131.42
# query plans are shallow: scans feed joins feed an aggregate
DAG_MAX_DEPTH = 4

GED_LABELS = ("C", "O", "N", "S", "Cl", "P", "F", "Br", "Na", "Cu")
# skewed like organic molecules: mostly carbon
GED_LABEL_WEIGHTS = np.array([0.55, 0.16, 0.12, 0.05, 0.04, 0.03, 0.02, 0.01, 0.01, 0.01])


def dag_node_count(rng: np.random.Generator) -> int:
    return int(min(DAG_MAX_NODES, 1 + rng.geometric(DAG_SIZE_P)))


def truncated_exponential(rng: np.random.Generator, scale: float, lo: float, hi: float) -> float:
    """Inverse-CDF draw from an exponential with the given scale, restricted to [lo, hi]."""
    u = rng.random()
    a, b = math.exp(-lo / scale), math.exp(-hi / scale)
    return -scale * math.log(a - u * (a - b))


def _duration(rng):
    x = truncated_exponential(rng, DUR_SCALE, DUR_MIN, DUR_MAX)
    tenths = min(max(round(x * 10), round(DUR_MIN * 10)), round(DUR_MAX * 10))
    return Fraction(tenths, 10)


def _resource(rng):
    x = truncated_exponential(rng, RES_SCALE, RES_MIN - 0.5, RES_MAX + 0.5)
    return min(max(round(x), RES_MIN), RES_MAX)


def random_job_dag(rng: np.random.Generator, m: int | None = None, extra_edge_p: float = 0.15):
    """Layered random DAG: every non-source node gets a parent in the previous layer."""
    if m is None:
        m = dag_node_count(rng)
    n_layers = min(m, int(rng.integers(2, DAG_MAX_DEPTH + 1)))
    layer = np.sort(np.concatenate([np.arange(n_layers), rng.integers(0, n_layers, m - n_layers)]))
    edges = set()
    for v in range(m):
        if layer[v] == 0:
            continue
        prev = np.flatnonzero(layer == layer[v] - 1)
        edges.add((int(rng.choice(prev)), v))
        for u in np.flatnonzero(layer < layer[v] - 1):
            if rng.random() < extra_edge_p:
                edges.add((int(u), v))
    return m, sorted(edges)


def generate_dag_instance(n_dags: int, rng: np.random.Generator) -> DagInstance:
    if n_dags < 1:
        raise ContractError("n_dags must be >= 1")
    edges, dur, res, job = [], [], [], []
    offset = 0
    for j in range(n_dags):
        m, es = random_job_dag(rng)
        edges += [(u + offset, v + offset) for u, v in es]
        dur += [_duration(rng) for _ in range(m)]
        res += [_resource(rng) for _ in range(m)]
        job += [j] * m
        offset += m
    return DagInstance(WeightedDigraph(offset, edges), tuple(dur), tuple(res), CAPACITY, job=tuple(job))


def generate_dag_set(count: int, n_dags: int, seed: int) -> list[DagInstance]:
    rng = np.random.default_rng(seed)
    return [generate_dag_instance(n_dags, rng) for _ in range(count)]


def random_molecule(n: int, rng: np.random.Generator, extra_edges: float = 0.12) -> LabeledGraph:
    labels = [GED_LABELS[i] for i in rng.choice(len(GED_LABELS), size=n, p=GED_LABEL_WEIGHTS)]
    edges = set()
    for v in range(1, n):
        u = int(rng.integers(v))
        edges.add((u, v))
    for _ in range(int(round(extra_edges * n))):
        u, v = (int(x) for x in rng.choice(n, 2, replace=False))
        edges.add((min(u, v), max(u, v)))
    return LabeledGraph(labels, edges)


def perturb(g: LabeledGraph, rng: np.random.Generator, label_edits: int = 0, edge_edits: int = 0,
            node_edits: int = 0, n_range: tuple[int, int] | None = None, shuffle: bool = True) -> LabeledGraph:
    """Apply label changes, edge toggles and node insertions/deletions, then relabel node ids."""
    labels = list(g.labels)
    edges = set(g.edges)
    lo, hi = n_range if n_range is not None else (1, 10**9)
    for _ in range(node_edits):
        n = len(labels)
        delete = n > lo and (n >= hi or rng.random() < 0.5)
        if delete:
            v = int(rng.integers(n))
            labels.pop(v)
            edges = {(a - (a > v), b - (b > v)) for a, b in edges if v not in (a, b)}
        elif n < hi:
            labels.append(GED_LABELS[int(rng.choice(len(GED_LABELS), p=GED_LABEL_WEIGHTS))])
            if n:
                edges.add((int(rng.integers(n)), n))
    n = len(labels)
    for _ in range(label_edits):
        if n == 0:
            break
        v = int(rng.integers(n))
        labels[v] = GED_LABELS[(GED_LABELS.index(labels[v]) + 1 + int(rng.integers(len(GED_LABELS) - 1)))
                               % len(GED_LABELS)]
    for _ in range(edge_edits):
        if n < 2:
            break
        u, v = sorted(int(x) for x in rng.choice(n, 2, replace=False))
        edges ^= {(u, v)}
    perm = rng.permutation(n) if shuffle else np.arange(n)
    new_labels = [None] * n
    for old, new in enumerate(perm):
        new_labels[new] = labels[old]
    return LabeledGraph(new_labels, [(int(perm[a]), int(perm[b])) for a, b in edges])


def generate_ged_pair(n_range: tuple[int, int], rng: np.random.Generator, label_edits: int = 3,
                      edge_edits: int = 6, node_edits: int = 2) -> tuple[LabeledGraph, LabeledGraph]:
    lo, hi = n_range
    if lo < 1 or hi < lo:
        raise ContractError(f"bad node range {n_range}")
    g1 = random_molecule(int(rng.integers(lo, hi + 1)), rng)
    g2 = perturb(g1, rng, label_edits, edge_edits, node_edits, n_range)
    return g1, g2


def generate_ged_set(count: int, n_range: tuple[int, int], seed: int, **edits) -> list:
    rng = np.random.default_rng(seed)
    return [generate_ged_pair(n_range, rng, **edits) for _ in range(count)]


def generate_hcp_instance(n: int, noise_factor: float, rng: np.random.Generator) -> tuple[HcpInstance, list[int]]:
    """Planted Hamiltonian cycle plus ``noise_factor * n`` distinct random chords.

    Returns the instance and the planted cycle (the witness).
    """
    if n < 3:
        raise ContractError("need n >= 3")
    witness = [int(v) for v in rng.permutation(n)]
    edges = {tuple(sorted((witness[i], witness[(i + 1) % n]))) for i in range(n)}
    target = min(len(edges) + int(round(noise_factor * n)), n * (n - 1) // 2)
    while len(edges) < target:
        u, v = (int(x) for x in rng.choice(n, 2, replace=False))
        edges.add((min(u, v), max(u, v)))
    return HcpInstance(n, frozenset(edges)), witness


def generate_hcp_set(count: int, n: int, noise_factor: float, seed: int):
    rng = np.random.default_rng(seed)
    return [generate_hcp_instance(n, noise_factor, rng) for _ in range(count)]
