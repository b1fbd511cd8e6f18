"""The bi-level environment: modify the graph, re-solve, score on the original.

A state holds the original instance and the current modified graph. A step
applies one edge action, runs the lower-level heuristic on the modified
graph, and evaluates the resulting solution against the ORIGINAL instance.
The reward is the decrease of that upper-level objective, so rewards over an
episode telescope to ``objective(x0) - objective(xK)`` exactly.

Actions per problem:

* ``dag``: add edge ``a1 -> a2`` (must be new and keep the graph acyclic).
* ``ged``: toggle edge ``{a1, a2}`` in the first graph.
* ``hcp``: add 10 to the length of tour edge ``{a1, a2}``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Any, Callable, NamedTuple

import numpy as np

from . import dag as dag_mod
from . import ged as ged_mod
from . import hcp as hcp_mod
from .errors import ContractError, EpisodeDoneError, InvalidActionError
from .formats import format_number
from .graph import DagInstance, HcpInstance, LabeledGraph, ancestor_masks, instance_kind

DEFAULT_K = {"dag": 20, "ged": 10, "hcp": 8}
DEFAULT_HEURISTIC = {"dag": "critical_path", "ged": "ipfp", "hcp": "lk_fast"}
HEURISTICS = {
    "dag": dag_mod.HEURISTICS,
    "ged": tuple(ged_mod.GED_SOLVERS),
    "hcp": hcp_mod.TOUR_HEURISTICS,
}
EDGE_PENALTY = 10


class SolveCounter:
    """Counts lower-level heuristic calls, for budget accounting."""

    def __init__(self):
        self.count = 0


solve_counter = SolveCounter()


class ActionPair(NamedTuple):
    a1: int
    a2: int


@dataclass(frozen=True)
class EnvConfig:
    problem: str
    K: int | None = None
    heuristic: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.problem not in DEFAULT_K:
            raise ContractError(f"unknown problem {self.problem!r}")
        if self.K is None:
            object.__setattr__(self, "K", DEFAULT_K[self.problem])
        if self.heuristic is None:
            object.__setattr__(self, "heuristic", DEFAULT_HEURISTIC[self.problem])
        if self.K < 1:
            raise ContractError("K must be >= 1")
        if self.heuristic not in HEURISTICS[self.problem]:
            raise ContractError(
                f"heuristic {self.heuristic!r} not valid for {self.problem}; choose from {HEURISTICS[self.problem]}")


@dataclass(frozen=True)
class Incumbent:
    solution: Any
    objective: int | Fraction
    k: int


@dataclass(frozen=True, eq=False)
class EnvState:
    """One node of the bi-level search.

    ``current`` is the modified graph: a ``WeightedDigraph`` (dag), the
    modified first graph (ged), or the penalised length matrix (hcp).
    ``last_solution`` is the lower-level solution as scored on the original
    instance; for dag that is the launch order replayed on the original
    precedence.
    """

    cfg: EnvConfig
    original: Any
    current: Any
    k: int
    last_solution: Any
    last_objective: int | Fraction
    incumbent: Incumbent
    history: tuple[ActionPair, ...] = ()
    done: bool = False
    lower_solution: Any = field(default=None, compare=False)

    @property
    def K(self) -> int:
        return self.cfg.K

    @cached_property
    def _ancestors(self) -> list[int]:
        return ancestor_masks(self.current)

    @cached_property
    def _pristine(self) -> np.ndarray:
        return hcp_mod.hcp_to_tsp(self.original)


@dataclass(frozen=True, eq=False)
class StepOutcome:
    reward: int | Fraction
    new_state: EnvState
    done: bool
    solution: Any


def _lower_seed(cfg: EnvConfig, history) -> int:
    entropy = [cfg.seed, len(history), *itertools.chain.from_iterable(history)]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint32)[0])


def _solve(cfg: EnvConfig, original, current, history):
    """Lower-level solve on ``current``; returns (solution scored on original, objective, raw solution)."""
    solve_counter.count += 1
    kind = cfg.problem
    if kind == "dag":
        sched, _ = dag_mod.solve_dag(original, current, cfg.heuristic)
        replayed = dag_mod.replay_on_original(original, sched)
        return replayed, replayed.makespan, sched
    if kind == "ged":
        g1, g2 = original
        res = ged_mod.GED_SOLVERS[cfg.heuristic](current, g2)
        cost = ged_mod.edit_cost(g1, g2, res.mapping)
        return res.mapping, cost, res
    tour = hcp_mod.solve_tsp(current, cfg.heuristic, _lower_seed(cfg, history))
    pristine = hcp_mod.hcp_to_tsp(original)
    return tour, hcp_mod.tour_length(pristine, tour.order), tour


def _validate_instance(cfg: EnvConfig, instance):
    kind = instance_kind(instance)
    if kind != cfg.problem:
        raise ContractError(f"config is for {cfg.problem!r} but instance is {kind!r}")
    if kind == "ged" and instance[0].node_count < 2:
        raise ContractError("ged needs at least 2 nodes in the first graph")
    if kind == "hcp" and instance.n < 3:
        raise ContractError("hcp needs at least 3 nodes")


def _initial_graph(instance):
    kind = instance_kind(instance)
    if kind == "dag":
        return instance.graph
    if kind == "ged":
        return instance[0]
    w = hcp_mod.hcp_to_tsp(instance)
    w.setflags(write=False)
    return w


def reset(instance, cfg: EnvConfig) -> EnvState:
    _validate_instance(cfg, instance)
    current = _initial_graph(instance)
    sol, obj, raw = _solve(cfg, instance, current, ())
    state = EnvState(cfg, instance, current, 0, sol, obj, Incumbent(sol, obj, 0), (), False, raw)
    if not has_legal_action(state):
        state = replace(state, done=True)
    return state


def _dag_seconds(state: EnvState, a1: int) -> list[int]:
    g = state.current
    anc = state._ancestors[a1]
    succ = set(g.successors(a1))
    return [v for v in range(g.node_count) if v != a1 and v not in succ and not (anc >> v) & 1]


def _dag_count(state: EnvState, a1: int) -> int:
    g = state.current
    return g.node_count - 1 - state._ancestors[a1].bit_count() - len(g.successors(a1))


def _tour_neighbors(state: EnvState, a1: int) -> list[int]:
    order = state.lower_solution.order
    n = len(order)
    i = order.index(a1)
    return sorted({order[(i - 1) % n], order[(i + 1) % n]})


def legal_seconds(state: EnvState, a1: int) -> list[int]:
    kind = state.cfg.problem
    n = node_count(state)
    if not 0 <= a1 < n:
        return []
    if kind == "dag":
        return _dag_seconds(state, a1)
    if kind == "ged":
        return [v for v in range(n) if v != a1]
    return _tour_neighbors(state, a1)


def legal_counts(state: EnvState) -> list[int]:
    """Number of legal second nodes for every first node."""
    kind = state.cfg.problem
    n = node_count(state)
    if kind == "dag":
        return [_dag_count(state, a1) for a1 in range(n)]
    if kind == "ged":
        return [n - 1] * n
    return [len(_tour_neighbors(state, a1)) for a1 in range(n)]


def node_count(state: EnvState) -> int:
    kind = state.cfg.problem
    if kind == "dag":
        return state.current.node_count
    if kind == "ged":
        return state.current.node_count
    return state.current.shape[0]


def has_legal_action(state: EnvState) -> bool:
    return any(c > 0 for c in legal_counts(state))


def legal_actions(state: EnvState, a1: int | None = None) -> list[int]:
    """Legal first nodes, or legal second nodes given ``a1``."""
    if state.done:
        raise EpisodeDoneError("episode is done")
    if a1 is None:
        return [v for v, c in enumerate(legal_counts(state)) if c > 0]
    return legal_seconds(state, a1)


def is_legal(state: EnvState, a: ActionPair) -> bool:
    a1, a2 = a
    n = node_count(state)
    if not (0 <= a1 < n and 0 <= a2 < n) or a1 == a2:
        return False
    kind = state.cfg.problem
    if kind == "dag":
        return not state.current.has_edge(a1, a2) and not (state._ancestors[a1] >> a2) & 1
    if kind == "ged":
        return True
    return a2 in _tour_neighbors(state, a1)


def _apply(state: EnvState, a: ActionPair):
    kind = state.cfg.problem
    if kind == "dag":
        return state.current.with_edge(a.a1, a.a2)
    if kind == "ged":
        return state.current.toggle_edge(a.a1, a.a2)
    w = state.current.copy()
    w[a.a1, a.a2] += EDGE_PENALTY
    w[a.a2, a.a1] += EDGE_PENALTY
    w.setflags(write=False)
    return w


def step(state: EnvState, a) -> StepOutcome:
    if state.done:
        raise EpisodeDoneError("episode is done")
    a = ActionPair(int(a[0]), int(a[1]))
    if not is_legal(state, a):
        raise InvalidActionError(f"illegal action {tuple(a)} at step {state.k}")
    current = _apply(state, a)
    history = state.history + (a,)
    sol, obj, raw = _solve(state.cfg, state.original, current, history)
    k = state.k + 1
    inc = state.incumbent
    if obj < inc.objective:
        inc = Incumbent(sol, obj, k)
    new = EnvState(state.cfg, state.original, current, k, sol, obj, inc, history, k >= state.K, raw)
    if not new.done and not has_legal_action(new):
        new = replace(new, done=True)
    return StepOutcome(state.last_objective - obj, new, new.done, sol)


Policy = Callable[[EnvState], ActionPair]


def run_episode(instance, cfg: EnvConfig, policy: Policy) -> tuple[list, Incumbent]:
    """Roll ``policy`` out for up to ``K`` steps; returns the rewards and best-seen incumbent."""
    state = reset(instance, cfg)
    rewards = []
    while not state.done:
        a = policy(state)
        if not is_legal(state, a):
            raise InvalidActionError(
                f"policy chose illegal action {tuple(a)} at step {state.k} (history {list(map(tuple, state.history))})")
        out = step(state, a)
        rewards.append(out.reward)
        state = out.new_state
    return rewards, state.incumbent


def _num(x):
    return format_number(x)


def observe(state: EnvState) -> dict:
    """JSON-ready observation with a stable field order."""
    kind = state.cfg.problem
    obs: dict[str, Any] = {"problem": kind, "k": state.k, "K": state.K,
                           "objective": _num(state.last_objective),
                           "incumbent": _num(state.incumbent.objective)}
    if kind == "dag":
        inst: DagInstance = state.original
        sched = state.last_solution
        finish = [Fraction(s + t, sched.scale) for s, t in zip(sched.start_ticks, inst.ticks)]
        obs["features"] = ["duration", "resource", "finish"]
        obs["nodes"] = [[_num(inst.duration[i]), inst.resource[i], _num(finish[i])]
                        for i in range(inst.node_count)]
        edges = sorted(state.current.edges)
        obs["edges"] = [[u, v] for u, v in edges]
        obs["reverse_edges"] = [[v, u] for u, v in edges]
    elif kind == "ged":
        g1, g2 = state.original
        vocab = sorted({str(x) for x in g1.labels + g2.labels})
        m: ged_mod.NodeMapping = state.last_solution
        c = ged_mod.UNIFORM
        cost1 = [c.node_indel if j is None else c.node_sub(g1.labels[i], g2.labels[j])
                 for i, j in enumerate(m.assign)]
        pre = {j: i for i, j in enumerate(m.assign) if j is not None}
        cost2 = [c.node_sub(g1.labels[pre[j]], g2.labels[j]) if j in pre else c.node_indel
                 for j in range(g2.node_count)]

        def table(g: LabeledGraph, costs):
            return [[1 if str(g.labels[i]) == lab else 0 for lab in vocab] + [_num(costs[i])]
                    for i in range(g.node_count)]

        obs["features"] = [f"label={lab}" for lab in vocab] + ["matched_cost"]
        obs["g1"] = {"nodes": table(g1, cost1), "edges": [list(e) for e in sorted(state.current.edges)]}
        obs["g2"] = {"nodes": table(g2, cost2), "edges": [list(e) for e in sorted(g2.edges)]}
        obs["mapping"] = [-1 if j is None else j for j in m.assign]
    else:
        h: HcpInstance = state.original
        w = state.current
        pristine = state._pristine
        order = state.last_solution.order
        n = len(order)
        deg = [0] * n
        for u, v in h.edges:
            deg[u] += 1
            deg[v] += 1
        nonedge = [0] * n
        for i in range(n):
            u, v = order[i], order[(i + 1) % n]
            if pristine[u, v] == 1:
                nonedge[u] += 1
                nonedge[v] += 1
        obs["features"] = ["degree", "tour_nonedges"]
        obs["nodes"] = [[deg[i], nonedge[i]] for i in range(n)]
        pairs = set(h.edges) | {(min(a), max(a)) for a in state.history}
        obs["edges"] = [[u, v, int(w[u, v])] for u, v in sorted(pairs)]
        obs["tour"] = list(order)
    return obs
