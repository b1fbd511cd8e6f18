"""Resource-constrained list scheduling on DAGs.

The simulator is event driven: decisions happen at t=0 and at every job
completion. At each event the ready jobs are scanned in priority order and
every job that fits the remaining capacity is started, so a blocked
high-priority job does not stop lower-priority ones from backfilling.
"""

from __future__ import annotations

import heapq
from bisect import insort
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import ContractError
from .graph import DagInstance, WeightedDigraph, topological_order

HEURISTICS = ("critical_path", "sjf")


@dataclass(frozen=True)
class Schedule:
    """Start times in integer ticks of ``1/scale`` seconds.

    ``start_order`` lists jobs in the order the simulator launched them.
    """

    start_ticks: tuple[int, ...]
    makespan_ticks: int
    scale: int
    start_order: tuple[int, ...]

    @property
    def start_time(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(s, self.scale) for s in self.start_ticks)

    @property
    def makespan(self) -> Fraction:
        return Fraction(self.makespan_ticks, self.scale)


def simulate_list_schedule(inst: DagInstance, order: Sequence[int], precedence: WeightedDigraph) -> Schedule:
    n = inst.node_count
    if precedence.node_count != n:
        raise ContractError(f"precedence has {precedence.node_count} nodes, instance has {n}")
    if sorted(order) != list(range(n)):
        raise ContractError("priority order must be a permutation of the nodes")
    rank = [0] * n
    for r, v in enumerate(order):
        rank[v] = r
    ticks = inst.ticks
    res = inst.resource
    cap = inst.capacity
    min_res = min(res, default=0)

    waiting = [len(precedence.predecessors(v)) for v in range(n)]
    ready = sorted(rank[v] for v in range(n) if waiting[v] == 0)
    running: list[tuple[int, int]] = []
    start = [-1] * n
    started: list[int] = []
    free = cap
    t = 0
    done = 0
    while done < n:
        if ready and free >= min_res:
            keep = []
            for r in ready:
                v = order[r]
                if res[v] <= free:
                    free -= res[v]
                    start[v] = t
                    started.append(v)
                    heapq.heappush(running, (t + ticks[v], v))
                else:
                    keep.append(r)
            ready = keep
        if not running:
            raise ContractError("precedence graph is cyclic; no job can start")
        t = running[0][0]
        while running and running[0][0] == t:
            _, u = heapq.heappop(running)
            free += res[u]
            done += 1
            for v in precedence.successors(u):
                waiting[v] -= 1
                if waiting[v] == 0:
                    insort(ready, rank[v])
    return Schedule(tuple(start), t if n else 0, inst.tick_scale, tuple(started))


def bottom_levels(inst: DagInstance, precedence: WeightedDigraph) -> list[int]:
    """Longest duration-weighted path (ticks) from each node to a sink, inclusive."""
    ticks = inst.ticks
    bl = [0] * inst.node_count
    for v in reversed(topological_order(precedence)):
        bl[v] = ticks[v] + max((bl[s] for s in precedence.successors(v)), default=0)
    return bl


def critical_path_priorities(inst: DagInstance, precedence: WeightedDigraph) -> list[int]:
    bl = bottom_levels(inst, precedence)
    return sorted(range(inst.node_count), key=lambda v: (-bl[v], v))


def sjf_priorities(inst: DagInstance) -> list[int]:
    return sorted(range(inst.node_count), key=lambda v: (inst.duration[v], v))


def priorities(inst: DagInstance, precedence: WeightedDigraph, heuristic: str) -> list[int]:
    if heuristic == "critical_path":
        return critical_path_priorities(inst, precedence)
    if heuristic == "sjf":
        return sjf_priorities(inst)
    raise ContractError(f"unknown DAG heuristic {heuristic!r}; expected one of {HEURISTICS}")


def solve_dag(inst: DagInstance, precedence: WeightedDigraph | None = None,
              heuristic: str = "critical_path") -> tuple[Schedule, Fraction]:
    """Run the list scheduler with ``heuristic`` priorities computed on ``precedence``."""
    if precedence is None:
        precedence = inst.graph
    sched = simulate_list_schedule(inst, priorities(inst, precedence, heuristic), precedence)
    return sched, sched.makespan


def replay_on_original(inst: DagInstance, sched: Schedule) -> Schedule:
    """Re-simulate ``sched``'s launch order as a priority list on the original precedence."""
    return simulate_list_schedule(inst, sched.start_order, inst.graph)
