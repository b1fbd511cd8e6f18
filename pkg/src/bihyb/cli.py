"""Command line: ``bihyb generate | solve | bihyb | serve | report``."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import generators as gen
from .errors import BiHybError
from .experiment import (ExperimentSpec, MethodSpec, aggregate, format_table, load_spec, read_csv,
                         run_experiment)
from .formats import serialize_fhcp, serialize_instance

PROBLEMS = click.Choice(["dag", "ged", "hcp"])


class _Group(click.Group):
    """Turns package errors into a one-line message and exit status 2."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except BiHybError as err:
            click.echo(f"error: {err}", err=True)
            ctx.exit(2)


def _seeds(seed: tuple[int, ...]) -> tuple[int, ...]:
    return seed or (0,)


def _emit(spec: ExperimentSpec, quiet: bool = False):
    def progress(cell):
        if not quiet:
            click.echo(f"{cell.method} {cell.instance} seed={cell.seed} objective={cell.objective}", err=True)

    cells, rows = run_experiment(spec, progress=progress)
    click.echo(format_table(rows), nl=False)
    if spec.out:
        click.echo(f"wrote {len(cells)} rows to {spec.out}", err=True)


@click.group(cls=_Group)
@click.version_option(package_name="artifact")
def main():
    """Bi-level graph modification around fast heuristics, for DAG scheduling, GED and HCP."""


@main.command()
@click.option("--problem", type=PROBLEMS, required=True)
@click.option("--count", type=click.IntRange(min=1), default=10, show_default=True, help="Instances to write.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n-dags", type=click.IntRange(min=1), default=50, show_default=True, help="dag: jobs per instance.")
@click.option("--n-min", type=click.IntRange(min=1), default=20, show_default=True, help="ged: smallest graph.")
@click.option("--n-max", type=click.IntRange(min=1), default=30, show_default=True, help="ged: largest graph.")
@click.option("--n", "n_nodes", type=click.IntRange(min=3), default=100, show_default=True, help="hcp: node count.")
@click.option("--noise", type=click.FloatRange(min=0), default=1.0, show_default=True,
              help="hcp: extra edges per node on top of the planted cycle.")
@click.option("--format", "fmt", type=click.Choice(["json", "fhcp"]), default="json", show_default=True,
              help="hcp file format.")
@click.option("--out", type=click.Path(file_okay=False), required=True, help="Output directory.")
def generate(problem, count, seed, n_dags, n_min, n_max, n_nodes, noise, fmt, out):
    """Write a seeded synthetic instance set; hcp instances get a .witness.json sidecar."""
    if problem == "ged" and n_min > n_max:
        raise click.BadParameter("--n-min must not exceed --n-max")
    if fmt == "fhcp" and problem != "hcp":
        raise click.BadParameter("--format fhcp only applies to hcp")
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    if problem == "dag":
        items = [(inst, None) for inst in gen.generate_dag_set(count, n_dags, seed)]
    elif problem == "ged":
        items = [(pair, None) for pair in gen.generate_ged_set(count, (n_min, n_max), seed)]
    else:
        items = gen.generate_hcp_set(count, n_nodes, noise, seed)
    for i, (inst, witness) in enumerate(items):
        stem = f"{problem}-{i:03d}"
        if fmt == "fhcp":
            (outdir / f"{stem}.hcp").write_text(serialize_fhcp(inst, stem))
        else:
            (outdir / f"{stem}.json").write_text(serialize_instance(inst))
        if witness is not None:
            (outdir / f"{stem}.witness.json").write_text(json.dumps({"cycle": witness}) + "\n")
    click.echo(f"wrote {count} {problem} instances to {outdir}", err=True)


_common = [
    click.option("--problem", type=PROBLEMS, required=True),
    click.option("--instances", multiple=True, required=True, type=click.Path(),
                 help="Instance file or directory; repeatable."),
    click.option("--seed", "--seeds", "seed", type=int, multiple=True, help="Repeatable; default 0."),
    click.option("--out", type=click.Path(dir_okay=False), help="CSV output path."),
    click.option("--time/--no-time", "record_time", default=False,
                 help="Fill the time_ms column (makes the CSV run-dependent)."),
    click.option("--quiet", is_flag=True, help="No per-cell progress on stderr."),
]


def _with_common(f):
    for opt in reversed(_common):
        f = opt(f)
    return f


@main.command()
@_with_common
@click.option("--method", multiple=True, required=True, help="Heuristic name; repeatable. First is the baseline.")
def solve(problem, instances, seed, out, record_time, quiet, method):
    """Run plain heuristics on instance files."""
    spec = ExperimentSpec(problem, list(instances), tuple(MethodSpec(m) for m in method), _seeds(seed), out,
                          record_time=record_time)
    _emit(spec, quiet)


@main.command("bihyb")
@_with_common
@click.option("--method", type=click.Choice(["random", "greedy", "beam"]), default="beam", show_default=True)
@click.option("--beam-width", type=click.IntRange(min=1), help="Beam width (default 3/3/12 for dag/ged/hcp).")
@click.option("--budget", type=click.IntRange(min=1), help="Candidate actions evaluated per expansion.")
@click.option("--K", "K", type=click.IntRange(min=1), help="Maximum graph modifications (default 20/10/8).")
@click.option("--heuristic", help="Lower-level heuristic (default critical_path/ipfp/lk_fast).")
@click.option("--baseline", help="Heuristic to compare against (default: the lower-level heuristic).")
@click.option("--best-of-seeds", is_flag=True, help="Keep each instance's best seed instead of the mean.")
def bihyb_cmd(problem, instances, seed, out, record_time, quiet, method, beam_width, budget, K, heuristic,
              baseline, best_of_seeds):
    """Run a bi-level search and compare it with a plain heuristic."""
    from .env import DEFAULT_HEURISTIC

    base = baseline or heuristic or DEFAULT_HEURISTIC[problem]
    methods = (MethodSpec(base), MethodSpec(method, heuristic=heuristic, beam_width=beam_width, budget=budget, K=K))
    spec = ExperimentSpec(problem, list(instances), methods, _seeds(seed), out,
                          seed_reduce="min" if best_of_seeds else "mean", record_time=record_time)
    _emit(spec, quiet)


@main.command()
@click.option("--transport", default="stdio", show_default=True, help="'stdio' or 'tcp:PORT'.")
def serve(transport):
    """Serve the environment over the JSON-lines protocol."""
    from .protocol import serve as run

    try:
        run(transport)
    except ValueError as err:
        raise click.BadParameter(str(err), param_hint="--transport") from err


@main.command()
@click.option("--spec", "spec_path", type=click.Path(dir_okay=False), help="JSON experiment spec to run.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="Existing result CSV to summarize.")
@click.option("--baseline", help="Baseline method for --csv (default: first method in the file).")
@click.option("--best-of-seeds", is_flag=True, help="--csv: keep each instance's best seed.")
@click.option("--quiet", is_flag=True)
def report(spec_path, csv_path, baseline, best_of_seeds, quiet):
    """Run an experiment spec, or summarize a result CSV, as an aligned table."""
    if (spec_path is None) == (csv_path is None):
        raise click.UsageError("give exactly one of --spec or --csv")
    if spec_path:
        _emit(load_spec(spec_path), quiet)
        return
    cells = read_csv(csv_path)
    if not cells:
        raise click.UsageError(f"{csv_path} has no rows")
    rows = aggregate(cells, baseline or cells[0].method, "min" if best_of_seeds else "mean")
    click.echo(format_table(rows), nl=False)


if __name__ == "__main__":
    sys.exit(main())
