"""Hamiltonian cycle via binary TSP, and the tour heuristics that solve it.

Edges of the HCP graph get length 0, non-edges length 1; a tour of length 0
is a Hamiltonian cycle. Penalised matrices (edge weights raised by the
upper-level search) stay integer-valued, so every length here is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .errors import ContractError
from .graph import HcpInstance

LK_PRESETS = {"lk_fast": 5, "lk_accu": 100}
TOUR_HEURISTICS = ("nn", "fi", "lk_fast", "lk_accu")


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]
    length: int


def hcp_to_tsp(h: HcpInstance) -> np.ndarray:
    if h.n < 3:
        raise ContractError(f"need at least 3 nodes, got {h.n}")
    w = np.ones((h.n, h.n), dtype=np.int64)
    np.fill_diagonal(w, 0)
    for u, v in h.edges:
        w[u, v] = w[v, u] = 0
    return w


def _check_matrix(m) -> np.ndarray:
    w = np.asarray(m)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ContractError("TSP matrix must be square")
    return w


def tour_length(m, order: Sequence[int]) -> int:
    w = _check_matrix(m)
    order = list(order)
    if sorted(order) != list(range(w.shape[0])):
        raise ContractError("tour must be a permutation of all nodes")
    idx = np.asarray(order)
    return w[idx, np.roll(idx, -1)].sum().item()


def is_hamiltonian_cycle(h: HcpInstance, order: Sequence[int]) -> bool:
    return tour_length(hcp_to_tsp(h), order) == 0


def nearest_neighbor(m, start: int = 0) -> Tour:
    w = _check_matrix(m)
    n = w.shape[0]
    visited = np.zeros(n, dtype=bool)
    order = [start]
    visited[start] = True
    cur = start
    for _ in range(n - 1):
        row = np.where(visited, np.iinfo(np.int64).max, w[cur])
        cur = int(np.argmin(row))
        visited[cur] = True
        order.append(cur)
    return Tour(tuple(order), tour_length(w, order))


def farthest_insertion(m) -> Tour:
    w = _check_matrix(m)
    n = w.shape[0]
    if n < 3:
        raise ContractError("farthest insertion needs at least 3 nodes")
    masked = w.astype(np.int64).copy()
    np.fill_diagonal(masked, -1)
    i, j = divmod(int(np.argmax(masked)), n)
    tour = [min(i, j), max(i, j)]
    in_tour = np.zeros(n, dtype=bool)
    in_tour[tour] = True
    dist = np.minimum(w[tour[0]], w[tour[1]]).astype(np.int64)
    for _ in range(n - 2):
        cand = np.where(in_tour, -1, dist)
        k = int(np.argmax(cand))
        t = np.asarray(tour)
        nxt = np.roll(t, -1)
        delta = w[t, k] + w[k, nxt] - w[t, nxt]
        pos = int(np.argmin(delta))
        tour.insert(pos + 1, k)
        in_tour[k] = True
        dist = np.minimum(dist, w[k])
    return Tour(tuple(tour), tour_length(w, tour))


@numba.njit(cache=True)
def _reverse(tour, pos, i, j):
    n = tour.shape[0]
    length = (j - i) % n + 1
    for _ in range(length // 2):
        a = tour[i]
        b = tour[j]
        tour[i] = b
        pos[b] = i
        tour[j] = a
        pos[a] = j
        i = (i + 1) % n
        j = (j - 1) % n


@numba.njit(cache=True)
def _tour_len(w, tour):
    n = tour.shape[0]
    s = 0
    for k in range(n):
        s += w[tour[k], tour[(k + 1) % n]]
    return s


@numba.njit(cache=True)
def _try_two_opt(w, tour, pos, a, active):
    n = tour.shape[0]
    for direction in (1, -1):
        b = tour[(pos[a] + direction) % n]
        wab = w[a, b]
        if wab == 0:
            continue
        for c in range(n):
            if c == a or c == b:
                continue
            d = tour[(pos[c] + direction) % n]
            if d == a:
                continue
            gain = wab + w[c, d] - w[a, c] - w[b, d]
            if gain > 0:
                if direction == 1:
                    _reverse(tour, pos, pos[b], pos[c])
                else:
                    _reverse(tour, pos, pos[a], pos[d])
                active[a] = True
                active[b] = True
                active[c] = True
                active[d] = True
                return gain
    return 0


@numba.njit(cache=True)
def _try_or_opt(w, tour, pos, a, active):
    n = tour.shape[0]
    for seg in range(1, 4):
        if n < seg + 3:
            break
        i = pos[a]
        last = tour[(i + seg - 1) % n]
        p = tour[(i - 1) % n]
        nx = tour[(i + seg) % n]
        removal = w[p, a] + w[last, nx] - w[p, nx]
        for c in range(n):
            off = (pos[c] - i) % n
            if off < seg or c == p:
                continue
            d = tour[(pos[c] + 1) % n]
            fwd = w[c, a] + w[last, d] - w[c, d]
            rev = w[c, last] + w[a, d] - w[c, d]
            reverse = rev < fwd
            add = rev if reverse else fwd
            gain = removal - add
            if gain > 0:
                rest = np.empty(n - seg, dtype=tour.dtype)
                segment = np.empty(seg, dtype=tour.dtype)
                for k in range(seg):
                    segment[k] = tour[(i + k) % n]
                for k in range(n - seg):
                    rest[k] = tour[(i + seg + k) % n]
                out = 0
                for k in range(n - seg):
                    tour[out] = rest[k]
                    out += 1
                    if rest[k] == c:
                        for q in range(seg):
                            tour[out] = segment[seg - 1 - q] if reverse else segment[q]
                            out += 1
                for k in range(n):
                    pos[tour[k]] = k
                active[a] = True
                active[last] = True
                active[p] = True
                active[nx] = True
                active[c] = True
                active[d] = True
                return gain
    return 0


@numba.njit(cache=True)
def _improve(w, tour, record, snapshots, lengths):
    n = tour.shape[0]
    pos = np.empty(n, dtype=np.int64)
    for k in range(n):
        pos[tour[k]] = k
    active = np.ones(n, dtype=np.bool_)
    length = _tour_len(w, tour)
    moves = 0
    if record:
        snapshots[0, :] = tour
        lengths[0] = length
    improved = True
    while improved:
        improved = False
        for a in range(n):
            if not active[a]:
                continue
            gain = _try_two_opt(w, tour, pos, a, active)
            if gain == 0:
                gain = _try_or_opt(w, tour, pos, a, active)
            if gain > 0:
                length -= gain
                moves += 1
                improved = True
                if record:
                    snapshots[moves, :] = tour
                    lengths[moves] = length
            else:
                active[a] = False
    return length, moves


@numba.njit(cache=True)
def _random_greedy_tour(w, seed):
    np.random.seed(seed)
    n = w.shape[0]
    visited = np.zeros(n, dtype=np.bool_)
    tour = np.empty(n, dtype=np.int64)
    cur = np.random.randint(n)
    tour[0] = cur
    visited[cur] = True
    for k in range(1, n):
        best = -1
        best_w = 0
        ties = 0
        for v in range(n):
            if visited[v]:
                continue
            if best == -1 or w[cur, v] < best_w:
                best, best_w, ties = v, w[cur, v], 1
            elif w[cur, v] == best_w:
                ties += 1
                if np.random.randint(ties) == 0:
                    best = v
        cur = best
        tour[k] = cur
        visited[cur] = True
    return tour


@numba.njit(cache=True)
def _lk_restarts(w, seeds):
    n = w.shape[0]
    best = np.empty(n, dtype=np.int64)
    best_len = -1
    empty2 = np.empty((0, 0), dtype=np.int64)
    empty1 = np.empty(0, dtype=np.int64)
    for r in range(seeds.shape[0]):
        tour = _random_greedy_tour(w, seeds[r])
        length, _ = _improve(w, tour, False, empty2, empty1)
        if best_len < 0 or length < best_len:
            best_len = length
            best[:] = tour
        if best_len == 0:
            break
    return best, best_len


def local_search(m, order: Sequence[int], record: bool = False):
    """Improve ``order`` with 2-opt and Or-opt moves until no strictly improving move remains.

    With ``record=True`` also returns every intermediate tour and the
    incrementally tracked length after each accepted move.
    """
    w = np.ascontiguousarray(_check_matrix(m), dtype=np.int64)
    tour = np.asarray(order, dtype=np.int64).copy()
    n = tour.shape[0]
    if record:
        cap = int(_tour_len(w, tour)) + 1
        snaps = np.empty((cap, n), dtype=np.int64)
        lengths = np.empty(cap, dtype=np.int64)
    else:
        snaps = np.empty((0, 0), dtype=np.int64)
        lengths = np.empty(0, dtype=np.int64)
    length, moves = _improve(w, tour, record, snaps, lengths)
    result = Tour(tuple(int(v) for v in tour), int(length))
    if record:
        return result, snaps[: moves + 1].copy(), lengths[: moves + 1].copy()
    return result


def restart_seeds(rng_seed, restarts: int) -> np.ndarray:
    ss = np.random.SeedSequence(rng_seed)
    return np.array([s.generate_state(1, dtype=np.uint32)[0] for s in ss.spawn(restarts)], dtype=np.int64)


def lk_search(m, restarts: int = 5, rng_seed=0) -> Tour:
    """Best of ``restarts`` randomized-greedy starts, each polished by :func:`local_search`.

    Stops early once a zero-length tour is found.
    """
    if restarts < 1:
        raise ContractError("restarts must be >= 1")
    w = np.ascontiguousarray(_check_matrix(m), dtype=np.int64)
    if w.shape[0] < 3:
        raise ContractError("need at least 3 nodes")
    best, length = _lk_restarts(w, restart_seeds(rng_seed, restarts))
    return Tour(tuple(int(v) for v in best), int(length))


def solve_tsp(m, heuristic: str, rng_seed=0) -> Tour:
    if heuristic == "nn":
        return nearest_neighbor(m, 0)
    if heuristic == "fi":
        return farthest_insertion(m)
    if heuristic in LK_PRESETS:
        return lk_search(m, LK_PRESETS[heuristic], rng_seed)
    raise ContractError(f"unknown tour heuristic {heuristic!r}; expected one of {TOUR_HEURISTICS}")
