import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bihyb.errors import ContractError
from bihyb.ged import (UNIFORM, CostModel, NodeMapping, bipartite_cost_matrix, brute_force_ged, edit_cost,
                       hungarian_ged, hungarian_lsap, ipfp_ged)
from bihyb.generators import generate_ged_pair, perturb, random_molecule
from bihyb.graph import LabeledGraph

from oracles import brute_force_lsap, edit_cost_oracle, exhaustive_ged

TRIANGLE = LabeledGraph("CCC", [(0, 1), (1, 2), (0, 2)])
PATH3 = LabeledGraph("CCC", [(0, 1), (1, 2)])
# frozen from exhaustive_ged
TRIANGLE_VS_PATH = 1


def oracle_cost(g1, g2, mapping, c=UNIFORM):
    return edit_cost_oracle(g1.labels, g1.edges, g2.labels, g2.edges, mapping.assign,
                            c.sub, c.node_indel, c.edge_indel)


def small_pair(seed, n_max=6):
    rng = np.random.default_rng(seed)
    g1 = random_molecule(int(rng.integers(1, n_max + 1)), rng, extra_edges=0.3)
    g2 = perturb(g1, rng, int(rng.integers(0, 3)), int(rng.integers(0, 4)), int(rng.integers(0, 2)), (1, n_max + 1))
    return g1, g2


def test_oracle_values():
    assert exhaustive_ged(TRIANGLE.labels, TRIANGLE.edges, PATH3.labels, PATH3.edges) == TRIANGLE_VS_PATH


def test_edit_cost_examples():
    assert edit_cost(TRIANGLE, TRIANGLE, NodeMapping((0, 1, 2), 3)) == 0
    assert edit_cost(LabeledGraph("A"), LabeledGraph("B"), NodeMapping((0,), 1)) == 1
    assert edit_cost(TRIANGLE, PATH3, NodeMapping((0, 1, 2), 3)) == 1
    assert edit_cost(TRIANGLE, PATH3, NodeMapping((None, None, None), 3)) == 3 + 3 + 3 + 2
    with pytest.raises(ContractError):
        NodeMapping((0, 0, 1), 3)


def test_lsap_examples():
    sigma, total = hungarian_lsap(np.array([[0, 9], [9, 0]]))
    assert list(sigma) == [0, 1] and total == 0
    sigma, total = hungarian_lsap(np.array([[1, 2], [2, 1]]))
    assert list(sigma) == [0, 1] and total == 2
    with pytest.raises(ContractError):
        hungarian_lsap(np.zeros((2, 3)))


@given(st.integers(0, 2**32 - 1))
def test_lsap_matches_exhaustive_search(seed):
    c = np.random.default_rng(seed).integers(0, 20, (6, 6))
    sigma, total = hungarian_lsap(c)
    assert sorted(sigma) == list(range(6))
    assert total == c[np.arange(6), sigma].sum() == brute_force_lsap(c.tolist())


def test_lsap_agrees_with_scipy():
    scipy_opt = pytest.importorskip("scipy.optimize")
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(1, 30))
        c = rng.random((n, n)) * 100
        rows, cols = scipy_opt.linear_sum_assignment(c)
        assert hungarian_lsap(c)[1] == pytest.approx(c[rows, cols].sum())


def test_hungarian_ged_examples():
    assert hungarian_ged(TRIANGLE, TRIANGLE).cost == 0
    k2 = LabeledGraph("CC", [(0, 1)])
    assert hungarian_ged(LabeledGraph([]), k2).cost == 3
    assert bipartite_cost_matrix(LabeledGraph([]), k2).shape == (2, 2)


def test_ipfp_examples():
    assert ipfp_ged(TRIANGLE, TRIANGLE, init=np.eye(3)).cost == 0
    assert ipfp_ged(TRIANGLE, PATH3).cost == TRIANGLE_VS_PATH
    assert ipfp_ged(TRIANGLE, PATH3).cost <= hungarian_ged(TRIANGLE, PATH3).cost
    with pytest.raises(ContractError):
        ipfp_ged(TRIANGLE, PATH3, max_iters=0)


def test_brute_force_examples():
    assert brute_force_ged(TRIANGLE, TRIANGLE).cost == 0
    assert brute_force_ged(TRIANGLE, LabeledGraph([])).cost == 6
    with pytest.raises(ContractError):
        brute_force_ged(LabeledGraph("C" * 9), LabeledGraph("C" * 8))


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_brute_force_matches_exhaustive_oracle(seed):
    g1, g2 = small_pair(seed, n_max=4)
    assert brute_force_ged(g1, g2).cost == exhaustive_ged(g1.labels, g1.edges, g2.labels, g2.edges)


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_heuristics_are_upper_bounds_with_consistent_costs(seed):
    g1, g2 = small_pair(seed)
    exact = brute_force_ged(g1, g2)
    assert exact.cost == oracle_cost(g1, g2, exact.mapping)
    for solver in (hungarian_ged, ipfp_ged):
        res = solver(g1, g2)
        assert res.cost >= exact.cost
        assert res.cost == oracle_cost(g1, g2, res.mapping)


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1))
def test_brute_force_is_symmetric(seed):
    g1, g2 = small_pair(seed, n_max=5)
    assert brute_force_ged(g1, g2).cost == brute_force_ged(g2, g1).cost


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_ipfp_relaxed_objective_never_increases(seed):
    rng = np.random.default_rng(seed)
    g1, g2 = generate_ged_pair((3, 12), rng)
    trace = ipfp_ged(g1, g2).objective_trace
    assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_zero_cost_iff_label_preserving_isomorphism(seed):
    rng = np.random.default_rng(seed)
    g1 = random_molecule(int(rng.integers(1, 7)), rng, extra_edges=0.3)
    g2 = perturb(g1, rng)
    exact = brute_force_ged(g1, g2)
    assert exact.cost == 0
    m = exact.mapping.assign
    assert all(j is not None and g1.labels[i] == g2.labels[j] for i, j in enumerate(m))
    assert {frozenset((m[a], m[b])) for a, b in g1.edges} == {frozenset(e) for e in g2.edges}
    # any other mapping that is not an isomorphism costs something
    for perm in itertools.islice(itertools.permutations(range(g2.node_count)), 50):
        iso = (all(g1.labels[i] == g2.labels[perm[i]] for i in range(g1.node_count))
               and {frozenset((perm[a], perm[b])) for a, b in g1.edges} == {frozenset(e) for e in g2.edges})
        assert (edit_cost(g1, g2, NodeMapping(perm, g2.node_count)) == 0) == iso


def test_weighted_cost_model():
    c = CostModel(sub=2, node_indel=3, edge_indel=5)
    g1, g2 = LabeledGraph("AB", [(0, 1)]), LabeledGraph("AC")
    exact = brute_force_ged(g1, g2, c)
    assert exact.cost == exhaustive_ged(g1.labels, g1.edges, g2.labels, g2.edges, sub=2, node_indel=3, edge_indel=5)
    assert hungarian_ged(g1, g2, c).cost >= exact.cost
    assert ipfp_ged(g1, g2, c).cost >= exact.cost
