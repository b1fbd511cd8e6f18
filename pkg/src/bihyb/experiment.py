"""Experiment runner: methods x instances x seeds, CSV cells and an aggregate table.

A method is either a plain heuristic (one lower-level solve) or a bi-level
search wrapped around the problem's default heuristic. Method names:

* heuristics: ``critical_path``, ``sjf``, ``hungarian``, ``ipfp``, ``nn``,
  ``fi``, ``lk_fast``, ``lk_accu`` and ``lk:R`` (R restarts);
* bi-level: ``random``, ``greedy``, ``beam``.

The relative column is ``(mean - baseline_mean) / baseline_mean`` with the
first method as baseline unless another is named.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean, pstdev
from typing import Any

from . import dag as dag_mod
from . import ged as ged_mod
from . import hcp as hcp_mod
from . import generators as gen
from .env import DEFAULT_HEURISTIC, HEURISTICS, EnvConfig, solve_counter
from .errors import ContractError, ValidationError
from .formats import exact_number, format_number, load_instance
from .policies import DEFAULT_BEAM_WIDTH, POLICY_KINDS, PolicyConfig, run_policy

CSV_COLUMNS = ("method", "instance", "seed", "objective", "time_ms", "lower_solves")
SEED_REDUCTIONS = ("mean", "min")


@dataclass(frozen=True)
class MethodSpec:
    name: str
    label: str | None = None
    heuristic: str | None = None
    beam_width: int | None = None
    budget: int | None = None
    K: int | None = None

    @property
    def title(self) -> str:
        return self.label or self.name

    @property
    def is_bilevel(self) -> bool:
        return self.name in POLICY_KINDS


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run. ``instances`` is a list of paths or a generator parameter dict."""

    problem: str
    instances: Any
    methods: tuple[MethodSpec, ...]
    seeds: tuple[int, ...] = (0,)
    out: str | None = None
    baseline: str | None = None
    seed_reduce: str = "mean"
    record_time: bool = False

    def __post_init__(self):
        if self.problem not in HEURISTICS:
            raise ValidationError(f"unknown problem {self.problem!r}")
        if not self.methods:
            raise ValidationError("an experiment needs at least one method")
        if not self.seeds:
            raise ValidationError("an experiment needs at least one seed")
        if self.seed_reduce not in SEED_REDUCTIONS:
            raise ValidationError(f"seed_reduce must be one of {SEED_REDUCTIONS}")
        titles = [m.title for m in self.methods]
        if len(set(titles)) != len(titles):
            raise ValidationError(f"method labels must be unique, got {titles}")
        if self.baseline is not None and self.baseline not in titles:
            raise ValidationError(f"baseline {self.baseline!r} is not one of the methods")
        for m in self.methods:
            check_method(self.problem, m)

    @property
    def baseline_title(self) -> str:
        return self.baseline or self.methods[0].title


@dataclass(frozen=True)
class Cell:
    method: str
    instance: str
    seed: int
    objective: Any
    time_ms: float | None
    lower_solves: int


@dataclass(frozen=True)
class ResultRow:
    method: str
    mean: float
    std: float
    relative: float
    time_ms: float | None
    lower_solves: float


def check_method(problem: str, m: MethodSpec) -> None:
    if m.is_bilevel:
        h = m.heuristic or DEFAULT_HEURISTIC[problem]
        if h not in HEURISTICS[problem]:
            raise ValidationError(f"heuristic {h!r} is not available for {problem}")
        for key in ("beam_width", "budget", "K"):
            v = getattr(m, key)
            if v is not None and v < 1:
                raise ValidationError(f"{m.title}: {key} must be >= 1")
        if m.name != "beam" and m.beam_width not in (None, 1):
            raise ValidationError(f"{m.title}: beam width only applies to beam search")
        return
    if problem == "hcp" and m.name.startswith("lk:"):
        r = m.name[3:]
        if not r.isdigit() or int(r) < 1:
            raise ValidationError(f"bad restart count in {m.name!r}")
        return
    if m.name not in HEURISTICS[problem]:
        raise ValidationError(
            f"unknown method {m.name!r} for {problem}; choose from {HEURISTICS[problem] + POLICY_KINDS}")


def _policy_config(problem: str, m: MethodSpec, seed: int) -> PolicyConfig:
    if m.name == "beam":
        width = m.beam_width or DEFAULT_BEAM_WIDTH[problem]
        return PolicyConfig("beam", width, m.budget or width, seed)
    return PolicyConfig(m.name, 1, m.budget or 1, seed)


def solve_baseline(problem: str, instance, name: str, seed: int):
    """One plain heuristic solve; returns the objective on the instance."""
    solve_counter.count += 1
    if problem == "dag":
        return dag_mod.solve_dag(instance, heuristic=name)[1]
    if problem == "ged":
        return ged_mod.GED_SOLVERS[name](*instance).cost
    m = hcp_mod.hcp_to_tsp(instance)
    if name.startswith("lk:"):
        return hcp_mod.lk_search(m, int(name[3:]), seed).length
    return hcp_mod.solve_tsp(m, name, seed).length


def run_cell(problem: str, instance, m: MethodSpec, seed: int):
    """Returns (objective, lower-level solve count)."""
    start = solve_counter.count
    if not m.is_bilevel:
        obj = solve_baseline(problem, instance, m.name, seed)
        return obj, solve_counter.count - start
    cfg = EnvConfig(problem, m.K, m.heuristic, seed)
    res = run_policy(instance, cfg, _policy_config(problem, m, seed))
    return res.incumbent.objective, res.lower_solves


def instance_files(paths) -> list[Path]:
    """Expand directories to their instance files; missing paths fail immediately."""
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out += sorted(q for q in p.iterdir()
                          if q.suffix in (".json", ".hcp") and not q.name.endswith(".witness.json"))
        elif p.is_file():
            out.append(p)
        else:
            raise ValidationError(f"instance file not found: {p}")
    if not out:
        raise ValidationError("no instance files given")
    return out


def generate_instances(problem: str, params: dict) -> list[tuple[str, Any]]:
    p = dict(params)
    count, seed = int(p.pop("count", 10)), int(p.pop("seed", 0))
    try:
        if problem == "dag":
            insts = gen.generate_dag_set(count, int(p.pop("n_dags", 50)), seed)
        elif problem == "ged":
            n_range = tuple(p.pop("n_range", (20, 30)))
            insts = gen.generate_ged_set(count, n_range, seed, **p)
            p = {}
        else:
            pairs = gen.generate_hcp_set(count, int(p.pop("n", 100)), float(p.pop("noise", 1.0)), seed)
            insts = [inst for inst, _ in pairs]
    except (TypeError, ContractError) as err:
        raise ValidationError(f"bad generator parameters: {err}") from err
    if p:
        raise ValidationError(f"unknown generator parameters {sorted(p)}")
    return [(f"{problem}-{i:03d}", inst) for i, inst in enumerate(insts)]


def load_instances(spec: ExperimentSpec) -> list[tuple[str, Any]]:
    if isinstance(spec.instances, dict):
        return generate_instances(spec.problem, spec.instances)
    out = []
    for path in instance_files(spec.instances):
        kind = "fhcp" if path.suffix == ".hcp" else spec.problem
        out.append((path.stem, load_instance(path, kind)))
    return out


def run_experiment(spec: ExperimentSpec, instances=None, progress=None) -> tuple[list[Cell], list[ResultRow]]:
    """Solve every method x instance x seed cell; write the CSV if ``spec.out`` is set."""
    instances = load_instances(spec) if instances is None else instances
    cells = []
    for m in spec.methods:
        for name, inst in instances:
            for seed in spec.seeds:
                t0 = time.perf_counter()
                obj, solves = run_cell(spec.problem, inst, m, seed)
                ms = (time.perf_counter() - t0) * 1000 if spec.record_time else None
                cells.append(Cell(m.title, name, seed, obj, ms, solves))
                if progress is not None:
                    progress(cells[-1])
    rows = aggregate(cells, spec.baseline_title, spec.seed_reduce)
    if spec.out:
        write_csv(cells, spec.out)
    return cells, rows


def _reduce(values, how):
    return min(values) if how == "min" else fmean(float(v) for v in values)


def aggregate(cells: list[Cell], baseline: str, seed_reduce: str = "mean") -> list[ResultRow]:
    """Per-method mean/std over instances; seeds are first reduced per instance."""
    methods = list(dict.fromkeys(c.method for c in cells))
    if baseline not in methods:
        raise ValidationError(f"baseline {baseline!r} has no results")
    per = {}
    for m in methods:
        mine = [c for c in cells if c.method == m]
        by_inst: dict[str, list] = {}
        for c in mine:
            by_inst.setdefault(c.instance, []).append(c.objective)
        vals = [float(_reduce(v, seed_reduce)) for v in by_inst.values()]
        times = [c.time_ms for c in mine if c.time_ms is not None]
        per[m] = (fmean(vals), pstdev(vals), fmean(times) if times else None,
                  fmean(c.lower_solves for c in mine))
    base = per[baseline][0]
    rows = []
    for m in methods:
        mean, std, t, solves = per[m]
        rel = (mean - base) / base if base else (0.0 if mean == base else math.inf)
        rows.append(ResultRow(m, mean, std, rel, t, solves))
    return rows


def cells_to_csv(cells: list[Cell]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in cells:
        w.writerow([c.method, c.instance, c.seed, format_number(c.objective),
                    "" if c.time_ms is None else f"{c.time_ms:.1f}", c.lower_solves])
    return buf.getvalue()


def write_csv(cells: list[Cell], path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(cells_to_csv(cells))


def read_csv(path) -> list[Cell]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValidationError(f"{path}: expected columns {','.join(CSV_COLUMNS)}")
        out = []
        for i, r in enumerate(reader, start=2):
            try:
                obj = exact_number(r["objective"])
                out.append(Cell(r["method"], r["instance"], int(r["seed"]),
                                obj.numerator if obj.denominator == 1 else obj,
                                float(r["time_ms"]) if r["time_ms"] else None, int(r["lower_solves"])))
            except (ValueError, TypeError) as err:
                raise ValidationError(f"{path}:{i}: {err}") from err
        return out


def format_table(rows: list[ResultRow]) -> str:
    header = ("method", "objective", "std", "relative", "time_ms", "lower_solves")
    body = [(r.method, f"{r.mean:.2f}", f"{r.std:.2f}", f"{r.relative * 100:+.1f}%",
             "-" if r.time_ms is None else f"{r.time_ms:.1f}", f"{r.lower_solves:.1f}") for r in rows]
    widths = [max(len(x[i]) for x in [header, *body]) for i in range(len(header))]
    lines = ["  ".join(x.ljust(w) if i == 0 else x.rjust(w) for i, (x, w) in enumerate(zip(line, widths)))
             for line in [header, *body]]
    return "\n".join(lines) + "\n"


def load_spec(path) -> ExperimentSpec:
    """Read a JSON experiment spec file."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as err:
        raise ValidationError(f"cannot read spec: {err}") from err
    except json.JSONDecodeError as err:
        raise ValidationError(f"{path}: invalid JSON: {err}") from err
    return spec_from_document(doc, base_dir=Path(path).parent)


def spec_from_document(doc: dict, base_dir=".") -> ExperimentSpec:
    if not isinstance(doc, dict):
        raise ValidationError("spec must be a JSON object")
    known = {"problem", "instances", "methods", "seeds", "out", "baseline", "seed_reduce", "record_time"}
    extra = set(doc) - known
    if extra:
        raise ValidationError(f"unknown spec keys {sorted(extra)}")
    try:
        methods = tuple(MethodSpec(m) if isinstance(m, str) else MethodSpec(**m) for m in doc.get("methods", ()))
    except TypeError as err:
        raise ValidationError(f"bad method entry: {err}") from err
    instances = doc.get("instances")
    if isinstance(instances, list):
        instances = [p if os.path.isabs(p) else str(Path(base_dir) / p) for p in instances]
    elif not isinstance(instances, dict):
        raise ValidationError("'instances' must be a list of paths or a generator object")
    return ExperimentSpec(
        problem=doc.get("problem"),
        instances=instances,
        methods=methods,
        seeds=tuple(doc.get("seeds", (0,))),
        out=doc.get("out"),
        baseline=doc.get("baseline"),
        seed_reduce=doc.get("seed_reduce", "mean"),
        record_time=bool(doc.get("record_time", False)),
    )
