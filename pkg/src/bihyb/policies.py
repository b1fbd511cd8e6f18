"""Upper-level search policies that need no learning.

Candidate actions are drawn uniformly without replacement from all legal
``(a1, a2)`` pairs. The random stream for a state is derived from the policy
seed and the action history that led to it, so two searches that share a
prefix see identical candidates there. That makes a width-1 beam replay the
greedy episode exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any

import numpy as np

from .env import (ActionPair, EnvConfig, EnvState, Incumbent, legal_counts, legal_seconds, reset,
                  run_episode, solve_counter, step)
from .errors import ContractError

POLICY_KINDS = ("random", "greedy", "beam")
DEFAULT_BEAM_WIDTH = {"dag": 3, "ged": 3, "hcp": 12}


class NoLegalAction(Exception):
    """Raised by a policy when the state has no legal action left."""


@dataclass(frozen=True)
class PolicyConfig:
    kind: str = "beam"
    beam_width: int = 1
    candidate_budget: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ContractError(f"unknown policy {self.kind!r}")
        if self.beam_width < 1:
            raise ContractError("beam width must be >= 1")
        if self.candidate_budget < self.beam_width:
            raise ContractError("candidate budget must be >= beam width")


@dataclass(frozen=True)
class BeamNode:
    state: EnvState
    score: Any
    lineage: tuple[ActionPair, ...]


@dataclass(frozen=True)
class SearchResult:
    incumbent: Incumbent
    lower_solves: int
    lineage: tuple[ActionPair, ...] = ()


def state_rng(seed: int, history) -> np.random.Generator:
    return np.random.default_rng([seed, len(history), *itertools.chain.from_iterable(history)])


def sample_candidates(state: EnvState, budget: int, rng: np.random.Generator) -> list[ActionPair]:
    """Up to ``budget`` distinct legal pairs, uniform over all legal pairs, sorted."""
    counts = legal_counts(state)
    total = sum(counts)
    if total == 0:
        return []
    if budget >= total:
        return [ActionPair(a1, a2) for a1, c in enumerate(counts) if c for a2 in legal_seconds(state, a1)]
    picks = np.sort(rng.choice(total, size=budget, replace=False))
    bounds = np.cumsum(counts)
    out = []
    cache: dict[int, list[int]] = {}
    for p in picks:
        a1 = int(np.searchsorted(bounds, p, side="right"))
        offset = int(p - (bounds[a1] - counts[a1]))
        if a1 not in cache:
            cache[a1] = legal_seconds(state, a1)
        out.append(ActionPair(a1, cache[a1][offset]))
    return out


def random_policy(state: EnvState, rng: np.random.Generator) -> ActionPair:
    """One legal pair, uniform over all legal pairs (a single-candidate draw)."""
    picks = sample_candidates(state, 1, rng)
    if not picks:
        raise NoLegalAction(f"no legal action at step {state.k}")
    return picks[0]


def _expand(state: EnvState, budget: int, seed: int):
    rng = state_rng(seed, state.history)
    return [(a, step(state, a)) for a in sample_candidates(state, budget, rng)]


def greedy_policy(state: EnvState, budget: int, seed: int = 0) -> ActionPair:
    """Evaluate up to ``budget`` sampled actions with one lower-level solve each; best reward wins."""
    expanded = _expand(state, budget, seed)
    if not expanded:
        raise NoLegalAction(f"no legal action at step {state.k}")
    best = max(expanded, key=lambda item: (item[1].reward, tuple(-x for x in item[0])))
    return best[0]


def make_policy(cfg: PolicyConfig):
    """Episode policy for ``run_episode`` (random or greedy kinds)."""
    if cfg.kind == "random":
        def policy(state):
            return random_policy(state, state_rng(cfg.seed, state.history))
        return policy
    if cfg.kind == "greedy":
        def policy(state):
            return greedy_policy(state, cfg.candidate_budget, cfg.seed)
        return policy
    raise ContractError("beam search is not an episode policy; use beam_search")


def _rank_key(node: BeamNode):
    return (node.score, node.state.last_objective, node.lineage)


def beam_search(instance, env_cfg: EnvConfig, pol_cfg: PolicyConfig) -> SearchResult:
    """Keep the ``beam_width`` best states per depth, each expanded by ``candidate_budget`` samples.

    States are ranked by incumbent objective, then current objective, then
    action lineage. The best incumbent anywhere in the tree is returned.
    """
    start = solve_counter.count
    root = reset(instance, env_cfg)
    best = root.incumbent
    best_lineage: tuple[ActionPair, ...] = ()
    beam = [BeamNode(root, root.incumbent.objective, ())]
    for _ in range(env_cfg.K):
        children = []
        for node in beam:
            if node.state.done:
                continue
            for a, out in _expand(node.state, pol_cfg.candidate_budget, pol_cfg.seed):
                s = out.new_state
                children.append(BeamNode(s, s.incumbent.objective, node.lineage + (a,)))
        if not children:
            break
        children.sort(key=_rank_key)
        beam = children[: pol_cfg.beam_width]
        for child in children:
            if child.state.incumbent.objective < best.objective:
                best = child.state.incumbent
                best_lineage = child.lineage[: best.k]
    return SearchResult(best, solve_counter.count - start, best_lineage)


def random_search(instance, env_cfg: EnvConfig, pol_cfg: PolicyConfig) -> SearchResult:
    """``candidate_budget`` independent random-policy episodes; best incumbent over all of them."""
    start = solve_counter.count
    best = None
    for r in range(pol_cfg.candidate_budget):
        seed = int(np.random.SeedSequence([pol_cfg.seed, r]).generate_state(1, dtype=np.uint32)[0])
        _, inc = run_episode(instance, env_cfg, make_policy(PolicyConfig("random", 1, 1, seed)))
        if best is None or inc.objective < best.objective:
            best = inc
    return SearchResult(best, solve_counter.count - start)


def run_policy(instance, env_cfg: EnvConfig, pol_cfg: PolicyConfig) -> SearchResult:
    if pol_cfg.kind == "beam":
        return beam_search(instance, env_cfg, pol_cfg)
    if pol_cfg.kind == "greedy":
        return beam_search(instance, env_cfg, PolicyConfig("beam", 1, pol_cfg.candidate_budget, pol_cfg.seed))
    return random_search(instance, env_cfg, pol_cfg)
