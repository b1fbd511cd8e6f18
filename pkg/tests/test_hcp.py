import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bihyb.errors import ContractError
from bihyb.generators import generate_hcp_instance
from bihyb.graph import HcpInstance
from bihyb.hcp import (farthest_insertion, hcp_to_tsp, is_hamiltonian_cycle, lk_search, local_search,
                       nearest_neighbor, solve_tsp, tour_length)

from oracles import PETERSEN_EDGES, brute_force_tour

# frozen from brute_force_tour
PETERSEN_MIN_TOUR = 1


def cycle(n):
    return HcpInstance(n, frozenset((i, (i + 1) % n) for i in range(n)))


PETERSEN = HcpInstance(10, frozenset(PETERSEN_EDGES))


def test_oracle_values():
    assert brute_force_tour(hcp_to_tsp(PETERSEN).tolist()) == PETERSEN_MIN_TOUR


def test_hcp_to_tsp_examples():
    w = hcp_to_tsp(cycle(5))
    assert (w == 0).sum() - 5 == 10
    assert (w == w.T).all() and (np.diag(w) == 0).all()
    k4 = HcpInstance(4, frozenset((i, j) for i in range(4) for j in range(i + 1, 4)))
    assert hcp_to_tsp(k4).sum() == 0
    assert hcp_to_tsp(HcpInstance(3)).sum() == 6
    with pytest.raises(ContractError):
        hcp_to_tsp(HcpInstance(2, frozenset({(0, 1)})))


def test_tour_length_examples():
    c5 = cycle(5)
    w = hcp_to_tsp(c5)
    assert tour_length(w, [0, 1, 2, 3, 4]) == 0 and is_hamiltonian_cycle(c5, [0, 1, 2, 3, 4])
    assert tour_length(w, [0, 2, 4, 1, 3]) == 5 and not is_hamiltonian_cycle(c5, [0, 2, 4, 1, 3])
    with pytest.raises(ContractError):
        tour_length(w, [0, 1, 2, 3])


def test_nearest_neighbor_examples():
    assert nearest_neighbor(hcp_to_tsp(cycle(5)), 0).length == 0
    assert nearest_neighbor(hcp_to_tsp(HcpInstance(4)), 0).length == 4
    t = nearest_neighbor(hcp_to_tsp(PETERSEN), 0)
    assert t.order[0] == 0 and t.length >= PETERSEN_MIN_TOUR
    assert not is_hamiltonian_cycle(PETERSEN, t.order)


def test_farthest_insertion_examples():
    assert farthest_insertion(np.zeros((6, 6), dtype=np.int64)).length == 0
    assert farthest_insertion(hcp_to_tsp(HcpInstance(5))).length == 5


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1))
def test_constructive_tours_bounded_by_brute_force(seed):
    rng = np.random.default_rng(seed)
    w = rng.integers(0, 2, (8, 8))
    w = np.triu(w, 1)
    w = w + w.T
    best = brute_force_tour(w.tolist())
    for t in (nearest_neighbor(w, 0), farthest_insertion(w), lk_search(w, 3, seed)):
        assert sorted(t.order) == list(range(8))
        assert t.length == tour_length(w, t.order) >= best


def test_lk_examples():
    assert lk_search(hcp_to_tsp(cycle(6)), restarts=1).length == 0
    ones = hcp_to_tsp(HcpInstance(7))
    assert lk_search(ones, restarts=2).length == 7
    tour, _, lengths = local_search(ones, list(range(7)), record=True)
    assert tour.length == 7 and list(lengths) == [7]
    assert lk_search(hcp_to_tsp(PETERSEN), restarts=20).length == PETERSEN_MIN_TOUR
    with pytest.raises(ContractError):
        lk_search(ones, restarts=0)


def test_lk_is_deterministic_per_seed():
    inst, _ = generate_hcp_instance(60, 1.0, np.random.default_rng(0))
    w = hcp_to_tsp(inst)
    assert lk_search(w, 5, 42) == lk_search(w, 5, 42)


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_local_search_moves_strictly_improve(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 40))
    inst, _ = generate_hcp_instance(n, float(rng.random() * 2), rng)
    w = hcp_to_tsp(inst)
    # penalised weights exercise non-binary matrices as well
    for _ in range(3):
        u, v = (int(x) for x in rng.choice(n, 2, replace=False))
        w[u, v] += 10
        w[v, u] += 10
    start = [int(x) for x in rng.permutation(n)]
    tour, snaps, lengths = local_search(w, start, record=True)
    assert lengths[0] == tour_length(w, start)
    for snap, length in zip(snaps, lengths):
        assert tour_length(w, snap) == length
    assert all(b < a for a, b in zip(lengths, lengths[1:]))
    assert tour.length == lengths[-1] <= lengths[0]


def test_more_restarts_find_more_planted_cycles():
    found = {5: 0, 100: 0}
    for seed in range(20):
        inst, witness = generate_hcp_instance(50, 2.0, np.random.default_rng(seed))
        assert is_hamiltonian_cycle(inst, witness)
        w = hcp_to_tsp(inst)
        for r in found:
            found[r] += lk_search(w, r, seed).length == 0
    assert found[5] < found[100]


def test_solve_tsp_dispatch():
    w = hcp_to_tsp(cycle(8))
    for h in ("nn", "fi", "lk_fast", "lk_accu"):
        assert solve_tsp(w, h, 0).length == 0
    with pytest.raises(ContractError):
        solve_tsp(w, "lkh3")
