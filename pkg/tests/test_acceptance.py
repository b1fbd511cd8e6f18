"""Acceptance suite: one PASS/FAIL line per criterion, shown in the pytest summary.

Run alone with ``pytest -m acceptance``. The bi-level improvement checks take
several minutes each on one core.
"""

import io
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from bihyb.dag import solve_dag
from bihyb.env import EnvConfig, reset, step
from bihyb.experiment import ExperimentSpec, MethodSpec, run_cell, run_experiment
from bihyb.ged import brute_force_ged, hungarian_ged, ipfp_ged
from bihyb.generators import (generate_dag_instance, generate_dag_set, generate_ged_pair, generate_ged_set,
                              generate_hcp_instance, generate_hcp_set)
from bihyb.hcp import hcp_to_tsp, lk_search
from bihyb.policies import PolicyConfig, make_policy, run_policy
from bihyb.protocol import serve_stream

from conftest import ACCEPTANCE_LINES
from oracles import edit_cost_oracle, schedule_violations
from test_env import random_topological_order

pytestmark = pytest.mark.acceptance
GOLDEN = Path(__file__).parent / "golden"


def record(n, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    assert ok, detail


def test_1_feasibility_fuzz():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    bad = 0
    for _ in range(1000):
        inst = generate_dag_instance(int(rng.integers(1, 6)), rng)
        edges = list(inst.graph.edges)
        for h in ("critical_path", "sjf"):
            sched, _ = solve_dag(inst, heuristic=h)
            bad += bool(schedule_violations(inst.duration, inst.resource, inst.capacity, edges, sched.start_time))
    secs = time.perf_counter() - t0
    record(1, bad == 0 and secs < 60, f"2000 schedules, {bad} infeasible, {secs:.1f}s (limit 60s)")


def _episode_instance(problem, rng):
    if problem == "dag":
        return generate_dag_instance(int(rng.integers(1, 6)), rng)
    if problem == "ged":
        return generate_ged_pair((5, 15), rng)
    return generate_hcp_instance(int(rng.integers(10, 60)), 1.0, rng)[0]


def test_2_reward_telescoping():
    t0 = time.perf_counter()
    mismatches = 0
    for problem in ("dag", "ged", "hcp"):
        rng = np.random.default_rng(202)
        for ep in range(100):
            s = reset(_episode_instance(problem, rng), EnvConfig(problem, seed=ep))
            first, total = s.last_objective, Fraction(0)
            policy = make_policy(PolicyConfig("random", seed=ep))
            while not s.done:
                out = step(s, policy(s))
                total += out.reward
                s = out.new_state
            mismatches += total != first - s.last_objective
    secs = time.perf_counter() - t0
    record(2, mismatches == 0 and secs < 120, f"300 episodes, {mismatches} mismatches, {secs:.1f}s (limit 120s)")


def test_3_ged_oracle_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    failures = 0
    for _ in range(50):
        g1, g2 = generate_ged_pair((1, 7), rng)
        exact = brute_force_ged(g1, g2).cost
        for res in (hungarian_ged(g1, g2), ipfp_ged(g1, g2)):
            recomputed = edit_cost_oracle(g1.labels, g1.edges, g2.labels, g2.edges, res.mapping.assign)
            failures += res.cost < exact or res.cost != recomputed
    secs = time.perf_counter() - t0
    record(3, failures == 0 and secs < 120, f"50 pairs, {failures} failures, {secs:.1f}s (limit 120s)")


def test_4_heuristic_ordering():
    t0 = time.perf_counter()
    pairs = generate_ged_set(50, (20, 30), seed=404)
    ipfp = np.mean([ipfp_ged(*p).cost for p in pairs])
    hung = np.mean([hungarian_ged(*p).cost for p in pairs])
    secs = time.perf_counter() - t0
    record(4, ipfp <= hung and secs < 300,
           f"mean ipfp {ipfp:.2f} vs hungarian {hung:.2f} ({(hung - ipfp) / ipfp:+.1%} for hungarian), {secs:.1f}s")


def _improvement(problem, instances, baseline, K, per_unit_limit):
    methods = (MethodSpec(baseline), MethodSpec("greedy", label="random-bihyb", budget=20, K=K))
    spec = ExperimentSpec(problem, None, methods, seeds=(0, 1, 2), seed_reduce="min")
    t0 = time.perf_counter()
    cells, rows = run_experiment(spec, instances=instances)
    per_unit = (time.perf_counter() - t0) / len(instances)
    base = {c.instance: c.objective for c in cells if c.method == baseline}
    best = {}
    for c in cells:
        if c.method == "random-bihyb":
            best[c.instance] = min(best.get(c.instance, c.objective), c.objective)
    worse = sum(best[i] > base[i] for i in base)
    gain = -rows[1].relative
    return worse, gain, per_unit, per_unit <= per_unit_limit


def test_5_bilevel_improves_dag():
    instances = [(f"dag-{i}", inst) for i, inst in enumerate(generate_dag_set(10, 50, seed=505))]
    worse, gain, per, fast = _improvement("dag", instances, "critical_path", 20, 300)
    record(5, worse == 0 and gain >= 0.02 and fast,
           f"mean makespan reduction {gain:.1%} (need >= 2%), worse on {worse}/10, {per:.0f}s per instance")


def test_6_bilevel_improves_ged():
    instances = [(f"ged-{i}", p) for i, p in enumerate(generate_ged_set(10, (20, 30), seed=606))]
    worse, gain, per, fast = _improvement("ged", instances, "ipfp", 10, 180)
    record(6, gain >= 0.03 and fast,
           f"mean cost reduction vs ipfp {gain:.1%} (need >= 3%), worse on {worse}/10, {per:.0f}s per pair")


def test_7_bilevel_improves_hcp():
    beam, matched, fast, found, slowest = [], [], [], 0, 0.0
    for i, (inst, _) in enumerate(generate_hcp_set(20, 100, 1.0, seed=707)):
        t0 = time.perf_counter()
        w = hcp_to_tsp(inst)
        lk = lk_search(w, 5, i).length
        res = run_policy(inst, EnvConfig("hcp", 8, "lk_fast", seed=i), PolicyConfig("beam", 12, 12, i))
        # plain local search given the same total number of restarts the beam spent
        same_budget, _ = run_cell("hcp", inst, MethodSpec(f"lk:{5 * res.lower_solves}"), i)
        slowest = max(slowest, time.perf_counter() - t0)
        fast.append(lk)
        found += lk == 0
        beam.append(res.incumbent.objective)
        matched.append(same_budget)
    b, m, f = np.mean(beam), np.mean(matched), np.mean(fast)
    ok = found < 10 and b <= m and slowest <= 300
    record(7, ok, f"lk_fast find-rate {found}/20; beam {b:.2f} vs budget-matched lk {m:.2f} "
                  f"(plain lk_fast {f:.2f}); slowest instance {slowest:.0f}s")


def test_8_chain_augmentation_forces_order():
    t0 = time.perf_counter()
    rng = np.random.default_rng(808)
    wrong = 0
    for _ in range(20):
        inst = generate_dag_instance(int(rng.integers(1, 6)), rng)
        target = random_topological_order(inst.graph, rng)
        g = inst.graph
        for u, v in zip(target, target[1:]):
            if not g.has_edge(u, v):
                g = g.with_edge(u, v)
        for h in ("critical_path", "sjf"):
            wrong += list(solve_dag(inst, g, h)[0].start_order) != target
    secs = time.perf_counter() - t0
    record(8, wrong == 0 and secs < 30, f"40 forced orders, {wrong} mismatches, {secs:.1f}s (limit 30s)")


def test_9_determinism(tmp_path):
    specs = [
        ("dag", {"count": 2, "n_dags": 5, "seed": 1}, ("critical_path", "sjf", "random", "greedy", "beam")),
        ("ged", {"count": 2, "n_range": [8, 12], "seed": 1}, ("hungarian", "ipfp", "random", "greedy", "beam")),
        ("hcp", {"count": 2, "n": 40, "seed": 1}, ("nn", "fi", "lk_fast", "random", "greedy", "beam")),
    ]
    differing = []
    for problem, gen, names in specs:
        methods = tuple(MethodSpec(n, budget=3, K=3) if n in ("random", "greedy") else
                        MethodSpec(n, beam_width=2, budget=3, K=3) if n == "beam" else MethodSpec(n)
                        for n in names)
        outputs = []
        for run in range(2):
            out = tmp_path / f"{problem}-{run}.csv"
            run_experiment(ExperimentSpec(problem, gen, methods, seeds=(0, 1), out=str(out)))
            outputs.append(out.read_bytes())
        if outputs[0] != outputs[1]:
            differing.append(problem)
    requests = (GOLDEN / "hcp_requests.jsonl").read_bytes()
    expected = (GOLDEN / "hcp_responses.jsonl").read_bytes()
    for _ in range(2):
        buf = io.BytesIO()
        serve_stream(io.BytesIO(requests), buf)
        if buf.getvalue() != expected:
            differing.append("golden transcript")
    record(9, not differing, "3 experiment specs and the golden transcript reproduce byte-for-byte"
           if not differing else f"not reproducible: {differing}")
