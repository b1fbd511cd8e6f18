from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bihyb.env import ActionPair, EnvConfig, legal_actions, reset, run_episode, solve_counter, step
from bihyb.errors import ContractError
from bihyb.generators import generate_dag_instance, generate_ged_pair, generate_hcp_instance
from bihyb.graph import DagInstance, WeightedDigraph
from bihyb.policies import (NoLegalAction, PolicyConfig, beam_search, greedy_policy, make_policy, random_policy,
                            random_search, run_policy, sample_candidates)


def chain(n, durs=None, res=None, cap=10):
    durs = durs or [1] * n
    return DagInstance(WeightedDigraph(n, [(i, i + 1) for i in range(n - 1)]), tuple(durs), tuple(res or [1] * n),
                       cap)


def small(problem, seed):
    rng = np.random.default_rng(seed)
    if problem == "dag":
        return generate_dag_instance(3, rng)
    if problem == "ged":
        return generate_ged_pair((5, 9), rng)
    return generate_hcp_instance(30, 1.0, rng)[0]


def test_config_validation():
    with pytest.raises(ContractError):
        PolicyConfig("beam", beam_width=3, candidate_budget=2)
    with pytest.raises(ContractError):
        PolicyConfig("sampling")
    with pytest.raises(ContractError):
        PolicyConfig("beam", beam_width=0)


def test_single_legal_pair_is_always_chosen():
    s = reset(chain(3), EnvConfig("dag"))
    rng = np.random.default_rng(0)
    assert {random_policy(s, rng) for _ in range(20)} == {ActionPair(0, 2)}


def test_random_policy_is_uniform_over_pairs():
    # chain 0->1->2->3 leaves exactly (0,2), (0,3), (1,3)
    s = reset(chain(4), EnvConfig("dag"))
    rng = np.random.default_rng(12345)
    draws = 100_000
    counts = Counter(random_policy(s, rng) for _ in range(draws))
    assert set(counts) == {(0, 2), (0, 3), (1, 3)}
    expected = draws / 3
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    assert chi2 < 13.8  # 0.999 quantile of chi-square with 2 degrees of freedom


def test_no_legal_action_is_signalled():
    s = reset(chain(2), EnvConfig("dag"))
    assert s.done
    with pytest.raises(NoLegalAction):
        random_policy(s, np.random.default_rng(0))


def test_greedy_exhaustive_matches_hand_evaluation():
    # 4 independent jobs; jobs 0 and 1 cannot run together
    inst = DagInstance(WeightedDigraph(4), (4, 4, 2, 2), (6, 6, 4, 4), 10)
    s = reset(inst, EnvConfig("dag"))
    pairs = [ActionPair(a, b) for a in legal_actions(s) for b in legal_actions(s, a)]
    scored = sorted(pairs, key=lambda p: (-step(s, p).reward, p))
    assert greedy_policy(s, budget=len(pairs)) == scored[0]


def test_greedy_ties_pick_the_smallest_pair():
    inst = DagInstance(WeightedDigraph(3), (1, 1, 1), (10, 10, 10), 10)
    s = reset(inst, EnvConfig("dag"))
    assert greedy_policy(s, budget=6) == ActionPair(0, 1)


def test_sample_candidates_are_distinct_and_legal():
    s = reset(small("dag", 4), EnvConfig("dag"))
    picks = sample_candidates(s, 25, np.random.default_rng(3))
    assert len(picks) == len(set(picks)) == 25
    assert all(b in legal_actions(s, a) for a, b in picks)


@pytest.mark.parametrize("problem", ["dag", "ged", "hcp"])
def test_width_one_beam_replays_the_greedy_episode(problem):
    inst = small(problem, 1)
    cfg = EnvConfig(problem, K=4, seed=2)
    res = beam_search(inst, cfg, PolicyConfig("beam", 1, 4, seed=8))
    s = reset(inst, cfg)
    policy = make_policy(PolicyConfig("greedy", 1, 4, seed=8))
    while not s.done:
        s = step(s, policy(s)).new_state
    assert res.incumbent.objective == s.incumbent.objective
    assert res.lineage == s.history[: s.incumbent.k]


@pytest.mark.parametrize("problem", ["dag", "ged", "hcp"])
def test_width_one_single_candidate_beam_is_a_random_episode(problem):
    inst = small(problem, 2)
    cfg = EnvConfig(problem, K=5, seed=1)
    res = beam_search(inst, cfg, PolicyConfig("beam", 1, 1, seed=6))
    _, inc = run_episode(inst, cfg, make_policy(PolicyConfig("random", seed=6)))
    assert res.incumbent.objective == inc.objective


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["dag", "ged", "hcp"]))
def test_wider_beam_is_no_worse_at_depth_two(seed, problem):
    # with K <= 2 the width-3 tree contains the width-1 tree, so this is guaranteed
    inst = small(problem, seed)
    cfg = EnvConfig(problem, K=2, seed=seed)
    w1 = beam_search(inst, cfg, PolicyConfig("beam", 1, 5, seed))
    w3 = beam_search(inst, cfg, PolicyConfig("beam", 3, 5, seed))
    assert w3.incumbent.objective <= w1.incumbent.objective


@pytest.mark.parametrize("kind", ["random", "greedy", "beam"])
def test_budget_accounting_and_incumbent_bound(kind):
    inst = small("ged", 5)
    cfg = EnvConfig("ged", K=3, seed=0)
    width = 2 if kind == "beam" else 1
    pol = PolicyConfig(kind, width, 4, seed=3)
    before = solve_counter.count
    res = run_policy(inst, cfg, pol)
    assert res.lower_solves == solve_counter.count - before
    base = reset(inst, cfg).last_objective
    assert res.incumbent.objective <= base
    if kind == "random":
        assert res.lower_solves <= 4 * (1 + 3)
    else:
        assert res.lower_solves <= 1 + 3 * width * 4


def test_runs_are_reproducible():
    inst = small("hcp", 3)
    cfg = EnvConfig("hcp", K=3, seed=4)
    a = run_policy(inst, cfg, PolicyConfig("beam", 3, 4, 9))
    b = run_policy(inst, cfg, PolicyConfig("beam", 3, 4, 9))
    assert a.incumbent.objective == b.incumbent.objective and a.lineage == b.lineage
    assert a.incumbent.solution == b.incumbent.solution


def test_random_search_runs_independent_episodes():
    inst = small("dag", 6)
    cfg = EnvConfig("dag", K=3, seed=0)
    res = random_search(inst, cfg, PolicyConfig("random", 1, 3, seed=1))
    assert res.lower_solves == 3 * 4
    assert res.incumbent.objective <= reset(inst, cfg).last_objective
